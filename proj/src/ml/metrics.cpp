#include "gridstab/ml/metrics.hpp"

#include "gridstab/error.hpp"

#include <cmath>
#include <limits>

namespace gridstab::ml {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a == 0) throw Error(ErrorKind::EmptyTestSet, "no test rows to evaluate");
    if (a != b) throw Error(ErrorKind::LengthMismatch, "truth and prediction lengths differ");
}

}  // namespace

ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted) {
    check_lengths(truth.size(), predicted.size());
    ClassificationMetrics m;
    m.n = truth.size();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
            throw Error(ErrorKind::BadParams, "class values must be 0 or 1");
        ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / static_cast<double>(m.n);
    return m;
}

RegressionMetrics regression_metrics(std::span<const double> truth, std::span<const double> predicted) {
    check_lengths(truth.size(), predicted.size());
    RegressionMetrics m;
    m.n = truth.size();
    const auto n = static_cast<double>(m.n);
    double mean = 0.0;
    for (double v : truth) mean += v;
    mean /= n;
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - predicted[i];
        sse += e * e;
        sst += (truth[i] - mean) * (truth[i] - mean);
    }
    m.rmse = std::sqrt(sse / n);
    m.r2 = sst > 0.0 ? 1.0 - sse / sst : std::numeric_limits<double>::quiet_NaN();
    return m;
}

nlohmann::json to_json(const ClassificationMetrics& m) {
    return {{"n", m.n},
            {"accuracy", m.accuracy},
            {"confusion", {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}}}};
}

nlohmann::json to_json(const RegressionMetrics& m) {
    nlohmann::json r2 = std::isnan(m.r2) ? nlohmann::json(nullptr) : nlohmann::json(m.r2);
    return {{"n", m.n}, {"rmse", m.rmse}, {"r2", r2}};
}

nlohmann::json to_json(const Metrics& m) {
    nlohmann::json out = to_json(m.classification);
    if (m.regression) out["regression"] = to_json(*m.regression);
    return out;
}

}  // namespace gridstab::ml
