#include "gridstab/core_data.hpp"

#include "gridstab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace gridstab {

std::string_view to_string(Label label) noexcept {
    return label == Label::Stable ? "stable" : "unstable";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
    auto iequals = [](std::string_view a, std::string_view b) {
        return a.size() == b.size() &&
               std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                   return std::tolower(static_cast<unsigned char>(x)) == y;
               });
    };
    if (iequals(text, "stable")) return Label::Stable;
    if (iequals(text, "unstable")) return Label::Unstable;
    return std::nullopt;
}

Label LabelConvention::label_for(double stab) const noexcept {
    if (stab == 0.0) return zero_policy == ZeroPolicy::Stable ? Label::Stable : Label::Unstable;
    const bool positive = stab > 0.0;
    return positive == positive_is_stable ? Label::Stable : Label::Unstable;
}

std::string LabelConvention::name() const {
    std::string out = positive_is_stable ? "paper" : "inverse";
    if (*this != (positive_is_stable ? paper() : inverse())) {
        out += zero_policy == ZeroPolicy::Stable ? "/zero=stable" : "/zero=unstable";
    }
    return out;
}

std::optional<LabelConvention> parse_convention(std::string_view name) noexcept {
    if (name == "paper") return LabelConvention::paper();
    if (name == "inverse") return LabelConvention::inverse();
    return std::nullopt;
}

std::array<double, kFeatureCount> GridSample::features() const noexcept {
    std::array<double, kFeatureCount> out{};
    for (std::size_t i = 0; i < kNodeCount; ++i) {
        out[i] = tau[i];
        out[kNodeCount + i] = p[i];
        out[2 * kNodeCount + i] = g[i];
    }
    return out;
}

std::vector<RuleViolation> check_sample(const GridSample& s, const LabelConvention& convention,
                                        std::size_t row) {
    std::vector<RuleViolation> out;
    auto fail = [&](std::string rule, std::string detail) {
        out.push_back({row, std::move(rule), std::move(detail)});
    };
    for (double v : s.features()) {
        if (!std::isfinite(v)) {
            fail("non_finite", "feature value is not finite");
            return out;
        }
    }
    if (!std::isfinite(s.stab)) {
        fail("non_finite", "stab is not finite");
        return out;
    }
    for (std::size_t i = 0; i < kNodeCount; ++i) {
        const std::string idx = std::to_string(i + 1);
        if (s.tau[i] < kTauMin || s.tau[i] > kTauMax)
            fail("tau_range", "tau" + idx + "=" + format_double(s.tau[i]) + " outside [0.5, 10]");
        if (s.g[i] < kGammaMin || s.g[i] > kGammaMax)
            fail("g_range", "g" + idx + "=" + format_double(s.g[i]) + " outside [0.05, 1]");
    }
    if (s.p[0] < kSupplierPowerMin || s.p[0] > kSupplierPowerMax)
        fail("p1_range", "p1=" + format_double(s.p[0]) + " outside [1.5, 6]");
    for (std::size_t i = 1; i < kNodeCount; ++i) {
        if (s.p[i] < kConsumerPowerMin || s.p[i] > kConsumerPowerMax)
            fail("consumer_p_range", "p" + std::to_string(i + 1) + "=" + format_double(s.p[i]) +
                                         " outside [-2, -0.5]");
    }
    const double residual = std::abs(s.p[0] + (s.p[1] + s.p[2] + s.p[3]));
    if (residual > kBalanceTolerance * std::abs(s.p[0]))
        fail("power_balance", "|p1+p2+p3+p4|=" + format_double(residual));
    if (convention.label_for(s.stab) != s.label)
        fail("label_sign", "label " + std::string(to_string(s.label)) + " inconsistent with stab=" +
                               format_double(s.stab) + " under convention " + convention.name());
    return out;
}

Dataset::Dataset(std::vector<GridSample> samples, std::string provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string provenance) const {
    std::vector<GridSample> rows;
    rows.reserve(indices.size());
    for (std::size_t i : indices) rows.push_back(samples_.at(i));
    return Dataset(std::move(rows), std::move(provenance));
}

std::vector<double> Dataset::feature_matrix() const {
    std::vector<double> out;
    out.reserve(samples_.size() * kFeatureCount);
    for (const auto& s : samples_) {
        const auto f = s.features();
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

std::vector<double> Dataset::column(std::size_t feature) const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.features()[feature]);
    return out;
}

std::vector<double> Dataset::stab_values() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.stab);
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_number(std::string_view text, std::size_t row, std::string_view column) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw RowParseError(row, std::string(column), "not a number: '" + std::string(text) + "'");
    return value;
}

GridSample parse_row(std::string_view line, std::size_t row) {
    const auto fields = split_fields(line);
    if (fields.size() != kCsvColumns.size()) {
        const auto col = fields.size() < kCsvColumns.size() ? std::string(kCsvColumns[fields.size()])
                                                            : std::string("<extra>");
        throw RowParseError(row, col,
                            "expected " + std::to_string(kCsvColumns.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    GridSample s;
    for (std::size_t i = 0; i < kNodeCount; ++i) {
        s.tau[i] = parse_number(fields[i], row, kCsvColumns[i]);
        s.p[i] = parse_number(fields[4 + i], row, kCsvColumns[4 + i]);
        s.g[i] = parse_number(fields[8 + i], row, kCsvColumns[8 + i]);
    }
    s.stab = parse_number(fields[12], row, "stab");
    const auto label = parse_label(fields[13]);
    if (!label) throw UnknownLabelError(std::string(fields[13]), row);
    s.label = *label;
    return s;
}

}  // namespace

LoadReport parse_csv(std::string_view text, const LoadOptions& options, std::string provenance) {
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start < text.size();) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

    const std::vector<std::string> expected(kCsvColumns.begin(), kCsvColumns.end());
    if (lines.empty()) throw HeaderMismatchError(expected, {});
    std::string_view header = lines.front();
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    std::vector<std::string> found;
    for (auto f : split_fields(header)) found.emplace_back(f);
    if (found != expected) throw HeaderMismatchError(expected, found);

    LoadReport report;
    std::vector<GridSample> samples;
    samples.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t row = li;
        try {
            GridSample s = parse_row(lines[li], row);
            auto violations = check_sample(s, options.convention, row);
            if (!violations.empty()) {
                const auto& v = violations.front();
                throw InvariantViolationError(v.row, v.rule, v.detail);
            }
            samples.push_back(s);
        } catch (const RowParseError& e) {
            if (!options.lenient) throw;
            report.dropped.push_back({row, "parse:" + e.column(), e.what()});
        } catch (const UnknownLabelError& e) {
            if (!options.lenient) throw;
            report.dropped.push_back({row, "unknown_label", e.what()});
        } catch (const InvariantViolationError& e) {
            if (!options.lenient) throw;
            report.dropped.push_back({row, e.rule(), e.what()});
        }
    }
    if (samples.empty())
        throw Error(ErrorKind::EmptyDataset, "no valid rows in " + provenance);
    report.dataset = Dataset(std::move(samples), std::move(provenance));
    return report;
}

LoadReport load_csv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    return parse_csv(text, options, path.string());
}

std::string to_csv(const Dataset& dataset) {
    std::string out;
    out.reserve(dataset.size() * 200 + 80);
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
        if (i) out += ',';
        out += kCsvColumns[i];
    }
    out += '\n';
    for (const auto& s : dataset.samples()) {
        for (double v : s.features()) {
            out += format_double(v);
            out += ',';
        }
        out += format_double(s.stab);
        out += ',';
        out += to_string(s.label);
        out += '\n';
    }
    return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << to_csv(dataset);
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<int> encode_labels(const Dataset& dataset) {
    std::vector<int> out;
    out.reserve(dataset.size());
    for (const auto& s : dataset.samples()) out.push_back(s.label == Label::Stable ? 1 : 0);
    return out;
}

std::vector<int> encode_labels(std::span<const std::string> labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto label = parse_label(labels[i]);
        if (!label) throw UnknownLabelError(labels[i], i + 1);
        out.push_back(*label == Label::Stable ? 1 : 0);
    }
    return out;
}

std::vector<Label> decode_labels(std::span<const int> encoded) {
    std::vector<Label> out;
    out.reserve(encoded.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        if (encoded[i] != 0 && encoded[i] != 1)
            throw UnknownLabelError(std::to_string(encoded[i]), i + 1);
        out.push_back(encoded[i] == 1 ? Label::Stable : Label::Unstable);
    }
    return out;
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorKind::BadFraction,
                    "test fraction must lie in (0, 1), got " + format_double(test_fraction));
    if (n < 2) throw Error(ErrorKind::TooFewSamples, "need at least 2 samples to split");
    // The epsilon keeps products like 0.7 * 10 = 7.000000000000001 from rounding up.
    const auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-9));
    if (n_test == 0 || n_test >= n)
        throw Error(ErrorKind::TooFewSamples, "split of " + std::to_string(n) + " rows at fraction " +
                                                  format_double(test_fraction) +
                                                  " leaves an empty side");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    SplitIndices out;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed) {
    const auto idx = split_indices(dataset.size(), test_fraction, seed);
    return {dataset.subset(idx.train, dataset.provenance() + "#train"),
            dataset.subset(idx.test, dataset.provenance() + "#test")};
}

}  // namespace gridstab
