#pragma once

#include "gridstab/core_data.hpp"
#include "gridstab/error.hpp"
#include "gridstab/feature_stats.hpp"
#include "gridstab/ml/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridstab::pipeline {

enum class PartitionStrategy { Contiguous, Hashed, Stratified };

std::string_view to_string(PartitionStrategy s) noexcept;

/// Contiguous: consecutive blocks whose sizes differ by at most one, larger
/// blocks first. Hashed: row i goes to derive_seed(seed, i) mod K.
/// Stratified: each label class is shuffled with the seed and dealt
/// round-robin so every part gets a near-equal share of both classes.
struct PartitionPlan {
    PartitionStrategy strategy = PartitionStrategy::Contiguous;
    std::size_t count = 1;
    std::uint64_t seed = 0;
};

/// Row indices of each partition, ascending. Throws TooManyPartitions when
/// count > n, BadConfig when count == 0.
std::vector<std::vector<std::size_t>> partition_indices(const Dataset& dataset, const PartitionPlan& plan);
std::vector<Dataset> partition(const Dataset& dataset, const PartitionPlan& plan);

enum class Aggregation { MeanAccuracy, BestPartition, VoteEnsemble };

std::string_view to_string(Aggregation a) noexcept;

struct PipelineConfig {
    PartitionPlan plan;
    ml::ModelSpec model;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    LabelConvention convention = LabelConvention::paper();
    Aggregation aggregation = Aggregation::MeanAccuracy;
    double alpha = stats::kDefaultAlpha;
    std::size_t histogram_bins = 20;
    std::vector<std::size_t> curve_sizes;  // empty: no learning curve
    /// Order in which partitions are processed; empty means 0..K-1. Results
    /// never depend on it.
    std::vector<std::size_t> execution_order;

    nlohmann::json to_json() const;
    /// Missing fields keep their defaults; the partition seed defaults to
    /// the top-level seed. Throws BadConfig.
    static PipelineConfig from_json(const nlohmann::json& doc);
};

PipelineConfig load_config(const std::filesystem::path& path);

/// A component error tagged with the pipeline stage and, where relevant, the
/// partition it came from. kind() is the original error kind.
class StageError : public Error {
public:
    StageError(std::string stage, std::optional<std::size_t> partition, ErrorKind kind,
               const std::string& detail);

    const std::string& stage() const noexcept { return stage_; }
    std::optional<std::size_t> partition() const noexcept { return partition_; }

private:
    std::string stage_;
    std::optional<std::size_t> partition_;
};

struct PartitionResult {
    std::size_t index = 0;
    std::size_t rows = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    ml::Metrics metrics;
};

struct AggregateResult {
    Aggregation mode = Aggregation::MeanAccuracy;
    ml::ClassificationMetrics classification;
    std::optional<double> rmse;          // pooled over partitions, stab models only
    std::optional<std::size_t> best_partition;
};

struct CurvePoint {
    std::size_t size = 0;
    double accuracy = 0.0;
};

struct PipelineReport {
    std::size_t dataset_rows = 0;
    PipelineConfig config;
    std::vector<PartitionResult> partitions;
    AggregateResult aggregate;
    std::vector<stats::FeatureImportance> importance;
    stats::Histogram stab_histogram;
    std::vector<CurvePoint> learning_curve;
    std::map<std::string, double> timings;  // seconds per stage; kept out of to_json
};

/// Size-weighted mean of per-partition accuracies, weighted by test-set size.
double weighted_mean_accuracy(const std::vector<PartitionResult>& partitions);

/// wrangle -> partition -> per-partition split/fit/evaluate -> aggregate ->
/// report. Partition k splits with derive_seed(seed, split, k) and fits with
/// derive_seed(seed, model, k).
PipelineReport run_pipeline(const Dataset& dataset, const PipelineConfig& config);

/// Uses the K = 1 split of run_pipeline. Each size fits on a subsample of the
/// training rows (the first `size` rows of one seeded permutation, restored
/// to dataset order) and is scored on the fixed test set. Sizes must be
/// non-decreasing, >= 1 and <= the training-set size (BadSizes).
std::vector<CurvePoint> learning_curve(const Dataset& dataset, const PipelineConfig& config,
                                       const std::vector<std::size_t>& train_sizes);

nlohmann::json to_json(const PipelineReport& report);
nlohmann::json timings_json(const PipelineReport& report);
std::string learning_curve_csv(const std::vector<CurvePoint>& points);
std::string partitions_csv(const std::vector<PartitionResult>& partitions);

/// report.json, timings.json, histogram.csv, importance.csv, partitions.csv
/// and, when present, learning_curve.csv.
void write_report(const PipelineReport& report, const std::filesystem::path& directory);

}  // namespace gridstab::pipeline
