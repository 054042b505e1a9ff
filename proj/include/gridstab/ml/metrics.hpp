#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <span>

namespace gridstab::ml {

/// Rows are the true class, columns the predicted class:
/// [[TN, FP], [FN, TP]] with class 1 = stable.
using Confusion = std::array<std::array<std::size_t, 2>, 2>;

struct ClassificationMetrics {
    std::size_t n = 0;
    double accuracy = 0.0;
    Confusion confusion{};
};

struct RegressionMetrics {
    std::size_t n = 0;
    double rmse = 0.0;
    double r2 = 0.0;  // NaN when the truth has zero variance
};

/// Classification metrics always; regression metrics only for models that
/// predict the continuous stab value.
struct Metrics {
    ClassificationMetrics classification;
    std::optional<RegressionMetrics> regression;
};

/// Throws EmptyTestSet on empty input, LengthMismatch on unequal spans.
ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted);
RegressionMetrics regression_metrics(std::span<const double> truth, std::span<const double> predicted);

nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const RegressionMetrics& m);
nlohmann::json to_json(const Metrics& m);

}  // namespace gridstab::ml
