#pragma once

#include "gridstab/core_data.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gridstab::stats {

struct FeatureSummary {
    std::string name;
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
};

/// One summary per feature column plus stab (13 entries, schema order).
std::vector<FeatureSummary> summarize(const Dataset& dataset);

/// Sample Pearson correlation. Needs equal lengths >= 3 and non-zero
/// variance in both vectors.
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-tailed p-value for H0: rho = 0 from t = r sqrt((n-2)/(1-r^2)).
/// Student-t tail (df = n-2) for n <= 1000, standard normal tail above.
double p_value(double r, std::size_t n);

inline constexpr std::size_t kNormalApproximationAbove = 1000;
inline constexpr double kDefaultAlpha = 0.05;

enum class CorrelationTarget { Stab, Label };

struct FeatureImportance {
    std::string name;
    double p_value = 1.0;
    double correlation = 0.0;
    bool important = false;
};

/// Correlation of every feature with stab (or, with CorrelationTarget::Label,
/// the point-biserial correlation with the encoded label), flagged important
/// when p < alpha. Features with zero variance get r = 0, p = 1.
std::vector<FeatureImportance> importance_table(const Dataset& dataset,
                                                double alpha = kDefaultAlpha,
                                                CorrelationTarget target = CorrelationTarget::Stab);

struct Histogram {
    std::vector<double> edges;  // bins + 1, strictly increasing
    std::vector<std::size_t> counts;
};

/// Uniform bins over [min, max], half-open except the last, which is closed.
/// A constant input is binned over [v - 0.5, v + 0.5].
Histogram histogram(std::span<const double> values, std::size_t bins);

nlohmann::json to_json(const std::vector<FeatureSummary>& summaries);
nlohmann::json to_json(const std::vector<FeatureImportance>& table, double alpha);
nlohmann::json to_json(const Histogram& hist);

std::string summary_csv(const std::vector<FeatureSummary>& summaries);
std::string importance_csv(const std::vector<FeatureImportance>& table);
std::string histogram_csv(const Histogram& hist);

}  // namespace gridstab::stats
