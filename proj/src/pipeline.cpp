#include "gridstab/pipeline.hpp"

#include "gridstab/seeding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace gridstab::pipeline {

std::string_view to_string(PartitionStrategy s) noexcept {
    switch (s) {
        case PartitionStrategy::Contiguous: return "contiguous";
        case PartitionStrategy::Hashed: return "hashed";
        case PartitionStrategy::Stratified: return "stratified";
    }
    return "contiguous";
}

std::string_view to_string(Aggregation a) noexcept {
    switch (a) {
        case Aggregation::MeanAccuracy: return "mean";
        case Aggregation::BestPartition: return "best";
        case Aggregation::VoteEnsemble: return "vote";
    }
    return "mean";
}

namespace {

PartitionStrategy parse_strategy(const std::string& name) {
    for (auto s : {PartitionStrategy::Contiguous, PartitionStrategy::Hashed, PartitionStrategy::Stratified})
        if (to_string(s) == name) return s;
    throw Error(ErrorKind::BadConfig, "unknown partition strategy '" + name + "'");
}

Aggregation parse_aggregation(const std::string& name) {
    if (name == "mean" || name == "mean-accuracy") return Aggregation::MeanAccuracy;
    if (name == "best" || name == "best-partition") return Aggregation::BestPartition;
    if (name == "vote" || name == "vote-ensemble") return Aggregation::VoteEnsemble;
    throw Error(ErrorKind::BadConfig, "unknown aggregation '" + name + "'");
}

std::string describe(const std::string& stage, std::optional<std::size_t> partition,
                     const std::string& detail) {
    std::string out = "stage " + stage;
    if (partition) out += ", partition " + std::to_string(*partition);
    return out + ": " + detail;
}

// Runs `body`, re-throwing any component error tagged with stage/partition.
template <typename F>
auto in_stage(const std::string& stage, std::optional<std::size_t> partition, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, partition, e.kind(), e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, partition, ErrorKind::Io, e.what());
    }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

StageError::StageError(std::string stage, std::optional<std::size_t> partition, ErrorKind kind,
                       const std::string& detail)
    : Error(kind, describe(stage, partition, detail)), stage_(std::move(stage)), partition_(partition) {}

std::vector<std::vector<std::size_t>> partition_indices(const Dataset& dataset, const PartitionPlan& plan) {
    const std::size_t n = dataset.size();
    const std::size_t k = plan.count;
    if (k == 0) throw Error(ErrorKind::BadConfig, "partition count must be >= 1");
    if (k > n)
        throw Error(ErrorKind::TooManyPartitions,
                    std::to_string(k) + " partitions requested for " + std::to_string(n) + " rows");
    std::vector<std::vector<std::size_t>> parts(k);
    switch (plan.strategy) {
        case PartitionStrategy::Contiguous: {
            const std::size_t base = n / k, extra = n % k;
            std::size_t row = 0;
            for (std::size_t p = 0; p < k; ++p) {
                const std::size_t size = base + (p < extra ? 1 : 0);
                parts[p].resize(size);
                std::iota(parts[p].begin(), parts[p].end(), row);
                row += size;
            }
            break;
        }
        case PartitionStrategy::Hashed:
            for (std::size_t i = 0; i < n; ++i)
                parts[derive_seed(plan.seed, seed_stream::partition, i) % k].push_back(i);
            break;
        case PartitionStrategy::Stratified: {
            std::array<std::vector<std::size_t>, 2> by_class;
            for (std::size_t i = 0; i < n; ++i)
                by_class[dataset[i].label == Label::Stable ? 1 : 0].push_back(i);
            std::size_t dealt = 0;
            for (std::size_t c = 0; c < 2; ++c) {
                std::mt19937_64 rng(derive_seed(plan.seed, seed_stream::partition, c));
                std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
                for (std::size_t row : by_class[c]) parts[dealt++ % k].push_back(row);
            }
            for (auto& part : parts) std::sort(part.begin(), part.end());
            break;
        }
    }
    return parts;
}

std::vector<Dataset> partition(const Dataset& dataset, const PartitionPlan& plan) {
    std::vector<Dataset> out;
    const auto parts = partition_indices(dataset, plan);
    out.reserve(parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p)
        out.push_back(dataset.subset(parts[p], dataset.provenance() + "#part" + std::to_string(p)));
    return out;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json doc{{"seed", seed},
                       {"test_fraction", test_fraction},
                       {"label_convention", convention.name()},
                       {"partition",
                        {{"strategy", pipeline::to_string(plan.strategy)},
                         {"count", plan.count},
                         {"seed", plan.seed}}},
                       {"model", model.to_json()},
                       {"aggregation", pipeline::to_string(aggregation)},
                       {"alpha", alpha},
                       {"histogram_bins", histogram_bins}};
    if (!curve_sizes.empty()) doc["learning_curve"] = {{"sizes", curve_sizes}};
    return doc;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc) {
    static const std::set<std::string> known{"seed",   "test_fraction", "label_convention",
                                             "partition", "model",      "aggregation",
                                             "alpha",  "histogram_bins", "learning_curve",
                                             "execution_order"};
    if (!doc.is_object()) throw Error(ErrorKind::BadConfig, "pipeline config must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown config field '" + key + "'");
    PipelineConfig cfg;
    try {
        cfg.seed = doc.value("seed", std::uint64_t{0});
        cfg.plan.seed = cfg.seed;
        cfg.test_fraction = doc.value("test_fraction", cfg.test_fraction);
        if (doc.contains("label_convention")) {
            const auto conv = parse_convention(doc["label_convention"].get<std::string>());
            if (!conv) throw Error(ErrorKind::BadConfig, "label_convention must be paper or inverse");
            cfg.convention = *conv;
        }
        if (doc.contains("partition")) {
            const auto& p = doc["partition"];
            if (p.contains("strategy")) cfg.plan.strategy = parse_strategy(p["strategy"].get<std::string>());
            if (p.contains("count")) cfg.plan.count = p["count"].get<std::size_t>();
            if (p.contains("seed")) cfg.plan.seed = p["seed"].get<std::uint64_t>();
        }
        if (doc.contains("model")) cfg.model = ml::ModelSpec::from_json(doc["model"]);
        if (doc.contains("aggregation")) cfg.aggregation = parse_aggregation(doc["aggregation"].get<std::string>());
        cfg.alpha = doc.value("alpha", cfg.alpha);
        cfg.histogram_bins = doc.value("histogram_bins", cfg.histogram_bins);
        if (doc.contains("learning_curve"))
            cfg.curve_sizes = doc["learning_curve"].at("sizes").get<std::vector<std::size_t>>();
        if (doc.contains("execution_order"))
            cfg.execution_order = doc["execution_order"].get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadConfig, std::string("pipeline config: ") + e.what());
    }
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw Error(ErrorKind::BadFraction, "test_fraction must lie in (0, 1)");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorKind::BadConfig, "alpha must lie in (0, 1)");
    if (cfg.histogram_bins == 0) throw Error(ErrorKind::BadBinCount, "histogram_bins must be >= 1");
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open config " + path.string());
    try {
        return PipelineConfig::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::BadConfig, std::string("config is not valid JSON: ") + e.what());
    }
}

double weighted_mean_accuracy(const std::vector<PartitionResult>& partitions) {
    double weighted = 0.0, total = 0.0;
    for (const auto& p : partitions) {
        weighted += p.metrics.classification.accuracy * static_cast<double>(p.test_size);
        total += static_cast<double>(p.test_size);
    }
    return total > 0.0 ? weighted / total : 0.0;
}

namespace {

std::vector<std::size_t> execution_order(const PipelineConfig& cfg, std::size_t k) {
    if (cfg.execution_order.empty()) {
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        return order;
    }
    std::vector<std::size_t> sorted = cfg.execution_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted.size() != k || sorted[i] != i)
            throw Error(ErrorKind::BadConfig, "execution_order must be a permutation of the partitions");
    return cfg.execution_order;
}

struct PartitionOutcome {
    PartitionResult result;
    std::optional<ml::Model> model;
    Dataset test;
    std::exception_ptr error;
};

AggregateResult aggregate(const PipelineConfig& cfg, std::vector<PartitionOutcome>& outcomes) {
    AggregateResult agg;
    agg.mode = cfg.aggregation;
    std::vector<PartitionResult> results;
    for (const auto& o : outcomes) results.push_back(o.result);
    const bool stab_models = results.front().metrics.regression.has_value();

    switch (cfg.aggregation) {
        case Aggregation::MeanAccuracy: {
            auto& c = agg.classification;
            double sq = 0.0;
            for (const auto& r : results) {
                c.n += r.test_size;
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) c.confusion[i][j] += r.metrics.classification.confusion[i][j];
                if (stab_models)
                    sq += r.metrics.regression->rmse * r.metrics.regression->rmse * static_cast<double>(r.test_size);
            }
            c.accuracy = weighted_mean_accuracy(results);
            if (stab_models) agg.rmse = std::sqrt(sq / static_cast<double>(c.n));
            break;
        }
        case Aggregation::BestPartition: {
            std::size_t best = 0;
            for (std::size_t i = 1; i < results.size(); ++i)
                if (results[i].metrics.classification.accuracy > results[best].metrics.classification.accuracy)
                    best = i;
            agg.best_partition = best;
            agg.classification = results[best].metrics.classification;
            if (stab_models) agg.rmse = results[best].metrics.regression->rmse;
            break;
        }
        case Aggregation::VoteEnsemble: {
            std::vector<int> truth, predicted;
            for (const auto& o : outcomes) {
                for (const auto& s : o.test.samples()) {
                    const auto f = s.features();
                    std::size_t stable_votes = 0;
                    for (const auto& other : outcomes) stable_votes += other.model->predict_class(f) == 1;
                    truth.push_back(s.label == Label::Stable ? 1 : 0);
                    predicted.push_back(2 * stable_votes > outcomes.size() ? 1 : 0);
                }
            }
            agg.classification = ml::classification_metrics(truth, predicted);
            break;
        }
    }
    return agg;
}

}  // namespace

PipelineReport run_pipeline(const Dataset& dataset, const PipelineConfig& config) {
    PipelineReport report;
    report.config = config;
    report.dataset_rows = dataset.size();
    const auto start = Clock::now();

    auto t = Clock::now();
    in_stage("wrangle", std::nullopt, [&] {
        if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no rows");
        (void)encode_labels(dataset);
        return 0;
    });
    report.timings["wrangle"] = seconds_since(t);

    t = Clock::now();
    const auto parts = in_stage("partition", std::nullopt, [&] { return partition(dataset, config.plan); });
    const auto order = in_stage("partition", std::nullopt, [&] { return execution_order(config, parts.size()); });
    report.timings["partition"] = seconds_since(t);

    t = Clock::now();
    std::vector<PartitionOutcome> outcomes(parts.size());
    const bool keep_models = config.aggregation == Aggregation::VoteEnsemble;
    const auto k_count = static_cast<std::ptrdiff_t>(order.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t slot = 0; slot < k_count; ++slot) {
        const std::size_t k = order[static_cast<std::size_t>(slot)];
        auto& out = outcomes[k];
        try {
            auto [train, test] = in_stage("split", k, [&] {
                return split(parts[k], config.test_fraction, derive_seed(config.seed, seed_stream::split, k));
            });
            auto model = in_stage("fit", k, [&] {
                return ml::fit_model(train, config.model, derive_seed(config.seed, seed_stream::model, k),
                                     config.convention);
            });
            out.result.metrics = in_stage("evaluate", k, [&] { return ml::evaluate(model, test); });
            out.result.index = k;
            out.result.rows = parts[k].size();
            out.result.train_size = train.size();
            out.result.test_size = test.size();
            if (keep_models) {
                out.model.emplace(std::move(model));
                out.test = std::move(test);
            }
        } catch (...) {
            out.error = std::current_exception();
        }
    }
    for (const auto& o : outcomes)
        if (o.error) std::rethrow_exception(o.error);
    report.timings["fit"] = seconds_since(t);

    t = Clock::now();
    report.aggregate = in_stage("aggregate", std::nullopt, [&] { return aggregate(config, outcomes); });
    for (auto& o : outcomes) report.partitions.push_back(std::move(o.result));
    report.timings["aggregate"] = seconds_since(t);

    t = Clock::now();
    in_stage("report", std::nullopt, [&] {
        report.importance = stats::importance_table(dataset, config.alpha);
        const auto stab = dataset.stab_values();
        report.stab_histogram = stats::histogram(stab, config.histogram_bins);
        return 0;
    });
    report.timings["report"] = seconds_since(t);

    if (!config.curve_sizes.empty()) {
        t = Clock::now();
        report.learning_curve = learning_curve(dataset, config, config.curve_sizes);
        report.timings["learning_curve"] = seconds_since(t);
    }
    report.timings["total"] = seconds_since(start);
    return report;
}

std::vector<CurvePoint> learning_curve(const Dataset& dataset, const PipelineConfig& config,
                                       const std::vector<std::size_t>& train_sizes) {
    auto [train, test] = in_stage("split", 0, [&] {
        return split(dataset, config.test_fraction, derive_seed(config.seed, seed_stream::split, 0));
    });
    in_stage("learning_curve", std::nullopt, [&] {
        if (train_sizes.empty()) throw Error(ErrorKind::BadSizes, "no training sizes given");
        for (std::size_t i = 0; i < train_sizes.size(); ++i) {
            if (train_sizes[i] == 0 || train_sizes[i] > train.size())
                throw Error(ErrorKind::BadSizes, "size " + std::to_string(train_sizes[i]) +
                                                     " outside [1, " + std::to_string(train.size()) + "]");
            if (i > 0 && train_sizes[i] < train_sizes[i - 1])
                throw Error(ErrorKind::BadSizes, "training sizes must be ascending");
        }
        return 0;
    });
    std::vector<std::size_t> perm(train.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(config.seed, seed_stream::curve, 0));
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<CurvePoint> points;
    for (std::size_t size : train_sizes) {
        std::vector<std::size_t> rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
        std::sort(rows.begin(), rows.end());
        const Dataset sub = train.subset(rows, train.provenance() + "#curve");
        const auto model = in_stage("learning_curve", std::nullopt, [&] {
            return ml::fit_model(sub, config.model, derive_seed(config.seed, seed_stream::model, 0),
                                 config.convention);
        });
        points.push_back({size, ml::evaluate(model, test).classification.accuracy});
    }
    return points;
}

nlohmann::json to_json(const PipelineReport& report) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : report.partitions)
        parts.push_back({{"index", p.index},
                         {"rows", p.rows},
                         {"train_size", p.train_size},
                         {"test_size", p.test_size},
                         {"metrics", ml::to_json(p.metrics)}});
    nlohmann::json agg{{"mode", to_string(report.aggregate.mode)},
                       {"metrics", ml::to_json(report.aggregate.classification)}};
    if (report.aggregate.rmse) agg["rmse"] = *report.aggregate.rmse;
    if (report.aggregate.best_partition) agg["best_partition"] = *report.aggregate.best_partition;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& c : report.learning_curve) curve.push_back({{"size", c.size}, {"accuracy", c.accuracy}});
    return {{"dataset_rows", report.dataset_rows},
            {"config", report.config.to_json()},
            {"partitions", parts},
            {"aggregate", agg},
            {"feature_importance", stats::to_json(report.importance, report.config.alpha)},
            {"stab_histogram", stats::to_json(report.stab_histogram)},
            {"learning_curve", curve}};
}

nlohmann::json timings_json(const PipelineReport& report) { return report.timings; }

std::string learning_curve_csv(const std::vector<CurvePoint>& points) {
    std::ostringstream out;
    out << "size,accuracy\n";
    for (const auto& p : points) out << p.size << ',' << format_double(p.accuracy) << '\n';
    return out.str();
}

std::string partitions_csv(const std::vector<PartitionResult>& partitions) {
    std::ostringstream out;
    out << "partition,rows,train_size,test_size,accuracy,tn,fp,fn,tp\n";
    for (const auto& p : partitions) {
        const auto& c = p.metrics.classification;
        out << p.index << ',' << p.rows << ',' << p.train_size << ',' << p.test_size << ','
            << format_double(c.accuracy) << ',' << c.confusion[0][0] << ',' << c.confusion[0][1] << ','
            << c.confusion[1][0] << ',' << c.confusion[1][1] << '\n';
    }
    return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace

void write_report(const PipelineReport& report, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + directory.string() + ": " + ec.message());
    write_text(directory / "report.json", to_json(report).dump(2) + "\n");
    write_text(directory / "timings.json", timings_json(report).dump(2) + "\n");
    write_text(directory / "histogram.csv", stats::histogram_csv(report.stab_histogram));
    write_text(directory / "importance.csv", stats::importance_csv(report.importance));
    write_text(directory / "partitions.csv", partitions_csv(report.partitions));
    if (!report.learning_curve.empty())
        write_text(directory / "learning_curve.csv", learning_curve_csv(report.learning_curve));
}

}  // namespace gridstab::pipeline
