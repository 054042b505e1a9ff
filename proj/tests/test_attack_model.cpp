#include "gridstab/attack_model.hpp"
#include "gridstab/error.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gridstab;
using namespace gridstab::attack;

TEST(DeltaDemand, Arithmetic) {
    EXPECT_EQ(delta_demand({"a", 5.0, 5.0}), 0.0);
    EXPECT_EQ(delta_demand({"a", 5.0, 8.0}), 3.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = u(rng), f = u(rng);
        EXPECT_EQ(delta_demand({"x", t, f}), f - t);
    }
}

TEST(AggregateLoss, Examples) {
    EXPECT_EQ(aggregate_loss(AttackScenario({{"a", 5, 8}, {"b", 1, 1}}, {}, 10)), 0.0);
    EXPECT_EQ(aggregate_loss(AttackScenario({{"a", 5, 8}, {"b", 1, 3}, {"c", 2, 2}}, {"a", "b"}, 10)), 5.0);
    try {
        aggregate_loss(AttackScenario({{"a", 5, 8}}, {"zz"}, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownCustomerInSet);
    }
}

TEST(AggregateLoss, MatchesFilterThenSumOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = oracle::random_scenario(rng);
        EXPECT_EQ(aggregate_loss(AttackScenario(s.customers, s.compromised, s.capacity)), oracle::filter_then_sum(s));
    }
}

TEST(AggregateLoss, NoAttackIsZero) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = oracle::random_scenario(rng);
        for (auto& c : s.customers) c.reported_demand = c.true_demand;
        EXPECT_EQ(aggregate_loss(AttackScenario(s.customers, s.compromised, s.capacity)), 0.0);
    }
}

TEST(Shortage, Examples) {
    auto plenty = shortage_report(AttackScenario({{"a", 2, 3}, {"b", 4, 4}}, {"a"}, 10));
    EXPECT_EQ(plenty.shortfall, 0.0);
    EXPECT_FALSE(plenty.affected);
    auto tight = shortage_report(AttackScenario({{"a", 5, 8}, {"b", 4, 4}}, {"a"}, 10));
    EXPECT_EQ(tight.total_requested, 12.0);
    EXPECT_EQ(tight.shortfall, 2.0);
    EXPECT_TRUE(tight.affected);
}

TEST(Shortage, RemovingFalseDemandNeverIncreasesShortfall) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        auto s = oracle::random_scenario(rng);
        const double attacked = shortage_report(AttackScenario(s.customers, s.compromised, s.capacity)).shortfall;
        for (auto& c : s.customers) c.reported_demand = c.true_demand;
        const double honest = shortage_report(AttackScenario(s.customers, s.compromised, s.capacity)).shortfall;
        EXPECT_LE(honest, attacked);
    }
}

TEST(Scenario, ValidationAndJson) {
    EXPECT_THROW(AttackScenario({{"a", -1, 2}}, {}, 1), Error);
    EXPECT_THROW(AttackScenario({{"a", 1, 2}}, {}, -1), Error);
    EXPECT_THROW(AttackScenario({{"a", 1, 2}, {"a", 1, 1}}, {}, 1), Error);
    const auto doc = nlohmann::json::parse(R"({
        "capacity": 10,
        "customers": [{"id": "a", "true": 5, "reported": 8}, {"id": "b", "true": 4, "reported": 4}],
        "compromised": ["a"]})");
    const auto scenario = scenario_from_json(doc);
    EXPECT_EQ(aggregate_loss(scenario), 3.0);
    const auto report = attack_report(scenario);
    EXPECT_EQ(report.at("aggregate_loss").get<double>(), 3.0);
    EXPECT_EQ(scenario_from_json(to_json(scenario)).customers().size(), 2u);
}
