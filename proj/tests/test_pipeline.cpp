#include "test_support.hpp"

#include "gridstab/pipeline.hpp"
#include "gridstab/seeding.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace gridstab;
using namespace gridstab::pipeline;
using gridstab::testing::random_dataset;
using gridstab::testing::TempDir;

namespace {

PipelineConfig small_config(std::size_t k, std::uint64_t seed = 7) {
    PipelineConfig cfg;
    cfg.plan = {PartitionStrategy::Contiguous, k, seed};
    cfg.model.kind = ml::ModelKind::Forest;
    cfg.model.forest.n_trees = 15;
    cfg.seed = seed;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Partition, SingleIsIdentity) {
    const auto ds = random_dataset(37, 1);
    const auto parts = partition(ds, {PartitionStrategy::Hashed, 1, 9});
    ASSERT_EQ(parts.size(), 1u);
    ASSERT_EQ(parts[0].size(), ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(parts[0][i], ds[i]);
}

TEST(Partition, ContiguousBalance) {
    const auto ds = random_dataset(10, 2);
    const auto idx = partition_indices(ds, {PartitionStrategy::Contiguous, 3, 0});
    ASSERT_EQ(idx.size(), 3u);
    EXPECT_EQ(idx[0], (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(idx[1], (std::vector<std::size_t>{4, 5, 6}));
    EXPECT_EQ(idx[2], (std::vector<std::size_t>{7, 8, 9}));
}

TEST(Partition, RandomPlansAreDisjointCovers) {
    std::mt19937_64 rng(3);
    const auto big = random_dataset(400, 3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng() % 400;
        const std::size_t k = 1 + rng() % n;
        const auto strategy = static_cast<PartitionStrategy>(rng() % 3);
        const std::uint64_t seed = rng();
        std::vector<std::size_t> first(n);
        for (std::size_t i = 0; i < n; ++i) first[i] = i;
        const auto ds = big.subset(first, "sub");
        const auto idx = partition_indices(ds, {strategy, k, seed});
        ASSERT_EQ(idx.size(), k);
        std::vector<int> seen(n, 0);
        for (const auto& part : idx) {
            EXPECT_TRUE(std::is_sorted(part.begin(), part.end()));
            for (auto i : part) ++seen[i];
        }
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }))
            << "n=" << n << " k=" << k << " strategy=" << to_string(strategy);
        if (strategy == PartitionStrategy::Contiguous) {
            auto [lo, hi] = std::minmax_element(idx.begin(), idx.end(),
                                                [](const auto& a, const auto& b) { return a.size() < b.size(); });
            EXPECT_LE(hi->size() - lo->size(), 1u);
        }
        if (strategy == PartitionStrategy::Hashed)
            for (std::size_t p = 0; p < k; ++p)
                for (auto i : idx[p]) ASSERT_EQ(derive_seed(seed, seed_stream::partition, i) % k, p);
    }
}

TEST(Partition, TooManyPartitions) {
    const auto ds = random_dataset(5, 4);
    try {
        partition(ds, {PartitionStrategy::Contiguous, 6, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooManyPartitions);
    }
}

TEST(Pipeline, SingleMatchesDirectFit) {
    const auto ds = random_dataset(500, 5);
    for (auto kind : {ml::ModelKind::Forest, ml::ModelKind::Logistic, ml::ModelKind::Ridge}) {
        auto cfg = small_config(1, 11);
        cfg.model.kind = kind;
        const auto report = run_pipeline(ds, cfg);
        const auto [train, test] = split(ds, cfg.test_fraction, derive_seed(11, seed_stream::split, 0));
        const auto model = ml::fit_model(train, cfg.model, derive_seed(11, seed_stream::model, 0));
        const auto direct = ml::evaluate(model, test);
        EXPECT_EQ(report.aggregate.classification.accuracy, direct.classification.accuracy);
        EXPECT_EQ(report.aggregate.classification.confusion, direct.classification.confusion);
        EXPECT_EQ(report.partitions[0].metrics.classification.accuracy, direct.classification.accuracy);
    }
}

TEST(Pipeline, WeightedMeanOracle) {
    const auto ds = random_dataset(403, 6);
    const auto report = run_pipeline(ds, small_config(4));
    ASSERT_EQ(report.partitions.size(), 4u);
    double correct = 0.0, total = 0.0;
    for (const auto& p : report.partitions) {
        const auto& c = p.metrics.classification;
        EXPECT_EQ(c.n, p.test_size);
        correct += double(c.confusion[0][0] + c.confusion[1][1]);
        total += double(c.n);
    }
    EXPECT_NEAR(report.aggregate.classification.accuracy, correct / total, 1e-15);
    EXPECT_NEAR(weighted_mean_accuracy(report.partitions), correct / total, 1e-15);
}

TEST(Pipeline, ReportsAreByteIdentical) {
    TempDir dir;
    const auto ds = random_dataset(300, 7);
    auto cfg = small_config(3);
    cfg.curve_sizes = {50, 100, 240};
    write_report(run_pipeline(ds, cfg), dir / "a");
    write_report(run_pipeline(ds, cfg), dir / "b");
    for (const char* f : {"report.json", "histogram.csv", "importance.csv", "partitions.csv", "learning_curve.csv"}) {
        const auto a = slurp(dir / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "timings.json"));
}

TEST(Pipeline, ExecutionOrderDoesNotMatter) {
    const auto ds = random_dataset(300, 8);
    auto cfg = small_config(4);
    const auto forward = to_json(run_pipeline(ds, cfg));
    cfg.execution_order = {3, 1, 0, 2};
    auto shuffled = to_json(run_pipeline(ds, cfg));
    shuffled["config"].erase("execution_order");
    auto fwd = forward;
    fwd["config"].erase("execution_order");
    EXPECT_EQ(fwd["partitions"].dump(), shuffled["partitions"].dump());
    EXPECT_EQ(fwd["aggregate"].dump(), shuffled["aggregate"].dump());
}

TEST(Pipeline, BestAndVoteModes) {
    const auto ds = random_dataset(400, 9);
    auto cfg = small_config(4);
    cfg.aggregation = Aggregation::BestPartition;
    const auto best = run_pipeline(ds, cfg);
    ASSERT_TRUE(best.aggregate.best_partition.has_value());
    double top = -1.0;
    std::size_t arg = 0;
    for (const auto& p : best.partitions)
        if (p.metrics.classification.accuracy > top) top = p.metrics.classification.accuracy, arg = p.index;
    EXPECT_EQ(*best.aggregate.best_partition, arg);
    EXPECT_EQ(best.aggregate.classification.accuracy, top);

    cfg.aggregation = Aggregation::VoteEnsemble;
    const auto vote = run_pipeline(ds, cfg);
    std::size_t pooled = 0;
    for (const auto& p : vote.partitions) pooled += p.test_size;
    EXPECT_EQ(vote.aggregate.classification.n, pooled);
    EXPECT_GT(vote.aggregate.classification.accuracy, 0.6);
}

TEST(Pipeline, StageErrorsNameStageAndPartition) {
    const auto ds = random_dataset(200, 10);
    auto cfg = small_config(2);
    cfg.model.kind = ml::ModelKind::Logistic;
    cfg.model.settings.max_iterations = 1;
    cfg.model.settings.require_convergence = true;
    try {
        run_pipeline(ds, cfg);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "fit");
        ASSERT_TRUE(e.partition().has_value());
        EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
        EXPECT_NE(std::string(e.what()).find("partition"), std::string::npos);
    }
}

TEST(LearningCurve, FullSizeMatchesSinglePipeline) {
    const auto ds = random_dataset(300, 11);
    auto cfg = small_config(1);
    const auto report = run_pipeline(ds, cfg);
    const std::size_t train = report.partitions[0].train_size;
    const auto curve = learning_curve(ds, cfg, {30, 30, train});
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_EQ(curve[0].accuracy, curve[1].accuracy);
    EXPECT_EQ(curve[2].accuracy, report.aggregate.classification.accuracy);
}

TEST(LearningCurve, BadSizes) {
    const auto ds = random_dataset(100, 12);
    const auto cfg = small_config(1);
    for (const std::vector<std::size_t>& sizes :
         {std::vector<std::size_t>{}, {0}, {50, 20}, {81}}) {
        try {
            learning_curve(ds, cfg, sizes);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::BadSizes);
        }
    }
}

TEST(PipelineConfig, JsonRoundTripAndErrors) {
    auto cfg = small_config(3, 99);
    cfg.plan.strategy = PartitionStrategy::Hashed;
    cfg.aggregation = Aggregation::VoteEnsemble;
    cfg.curve_sizes = {10, 20};
    const auto back = PipelineConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.to_json(), cfg.to_json());
    const auto defaults = PipelineConfig::from_json({{"seed", 5}});
    EXPECT_EQ(defaults.plan.seed, 5u);
    try {
        PipelineConfig::from_json({{"aggregation", "median"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadConfig);
    }
}
