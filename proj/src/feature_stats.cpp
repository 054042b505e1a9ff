#include "gridstab/feature_stats.hpp"

#include "gridstab/error.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridstab::stats {

std::vector<FeatureSummary> summarize(const Dataset& dataset) {
    if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "cannot summarize an empty dataset");
    std::vector<FeatureSummary> out;
    for (std::size_t f = 0; f <= kFeatureCount; ++f) {
        const auto values = f < kFeatureCount ? dataset.column(f) : dataset.stab_values();
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        out.push_back({f < kFeatureCount ? std::string(kFeatureNames[f]) : std::string("stab"),
                       values.size(), *lo, *hi});
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorKind::LengthMismatch, "pearson: vectors differ in length");
    if (x.size() < 3) throw Error(ErrorKind::LengthMismatch, "pearson: need at least 3 values");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::ZeroVariance, "pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double p_value(double r, std::size_t n) {
    if (n < 3 || !(std::abs(r) < 1.0))
        throw Error(ErrorKind::DegenerateInput, "p_value needs n >= 3 and |r| < 1");
    if (r == 0.0) return 1.0;
    const double df = static_cast<double>(n - 2);
    const double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
    if (n > kNormalApproximationAbove) return std::erfc(t / std::sqrt(2.0));
    // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

std::vector<FeatureImportance> importance_table(const Dataset& dataset, double alpha,
                                                CorrelationTarget target) {
    if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "importance table of empty dataset");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorKind::BadParams, "significance level must lie in (0, 1)");
    std::vector<double> y;
    if (target == CorrelationTarget::Stab) {
        y = dataset.stab_values();
    } else {
        for (int v : encode_labels(dataset)) y.push_back(v);
    }
    std::vector<FeatureImportance> out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        FeatureImportance fi{std::string(kFeatureNames[f]), 1.0, 0.0, false};
        const auto x = dataset.column(f);
        try {
            fi.correlation = pearson(x, y);
            fi.p_value = std::abs(fi.correlation) < 1.0 ? p_value(fi.correlation, x.size()) : 0.0;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ZeroVariance) throw;
        }
        fi.important = fi.p_value < alpha;
        out.push_back(fi);
    }
    return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "histogram of empty input");
    if (bins < 1) throw Error(ErrorKind::BadBinCount, "histogram needs at least one bin");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorKind::NonFiniteData, "histogram input must be finite");
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    const double width = (hi - lo) / static_cast<double>(bins);
    h.edges.resize(bins + 1);
    for (std::size_t k = 0; k < bins; ++k) h.edges[k] = lo + static_cast<double>(k) * width;
    h.edges[bins] = hi;
    h.counts.assign(bins, 0);
    for (double v : values) {
        auto k = std::min(static_cast<std::size_t>((v - lo) / width), bins - 1);
        // Snap to the stored edges so membership agrees with [e_k, e_k+1).
        while (k > 0 && v < h.edges[k]) --k;
        while (k + 1 < bins && v >= h.edges[k + 1]) ++k;
        ++h.counts[k];
    }
    return h;
}

nlohmann::json to_json(const std::vector<FeatureSummary>& summaries) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : summaries)
        rows.push_back({{"feature", s.name}, {"count", s.count}, {"min", s.min}, {"max", s.max}});
    return rows;
}

nlohmann::json to_json(const std::vector<FeatureImportance>& table, double alpha) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& f : table) {
        rows.push_back({{"feature", f.name},
                        {"p_value", f.p_value},
                        {"correlation", f.correlation},
                        {"importance", f.important ? "Important" : "Not Important"}});
    }
    return {{"alpha", alpha}, {"features", rows}};
}

nlohmann::json to_json(const Histogram& hist) {
    return {{"edges", hist.edges}, {"counts", hist.counts}};
}

std::string summary_csv(const std::vector<FeatureSummary>& summaries) {
    std::ostringstream os;
    os << "feature,count,min,max\n";
    for (const auto& s : summaries)
        os << s.name << ',' << s.count << ',' << format_double(s.min) << ',' << format_double(s.max)
           << '\n';
    return os.str();
}

std::string importance_csv(const std::vector<FeatureImportance>& table) {
    std::ostringstream os;
    os << "feature,p_value,correlation,importance\n";
    for (const auto& f : table)
        os << f.name << ',' << format_double(f.p_value) << ',' << format_double(f.correlation) << ','
           << (f.important ? "Important" : "Not Important") << '\n';
    return os.str();
}

std::string histogram_csv(const Histogram& hist) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        os << format_double(hist.edges[k]) << ',' << format_double(hist.edges[k + 1]) << ','
           << hist.counts[k] << '\n';
    return os.str();
}

}  // namespace gridstab::stats
