#pragma once

// Reference computations that share no code with the library under test.

#include "gridstab/attack_model.hpp"
#include "gridstab/ml/linear.hpp"
#include "gridstab/ml/tree.hpp"
#include "gridstab/spatial_load.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace gridstab::oracle {

inline double relative_gap(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double gini_pair(std::size_t a, std::size_t b) {
    const double n = double(a + b);
    const double p = double(a) / n, q = double(b) / n;
    return 1.0 - (p * p + q * q);
}

// Closed-form ridge on standardized inputs: w = (Xs'Xs + n lambda I)^-1 Xs'y,
// b = mean(y) because the columns of Xs are centred.
inline std::pair<Eigen::VectorXd, double> ridge(const ml::Matrix& xs, std::span<const double> y, double lambda) {
    const auto n = Eigen::Index(xs.rows()), d = Eigen::Index(xs.cols());
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd Y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) X(r, c) = xs(std::size_t(r), std::size_t(c));
        Y(r) = y[std::size_t(r)];
    }
    const Eigen::MatrixXd A = X.transpose() * X + double(n) * lambda * Eigen::MatrixXd::Identity(d, d);
    return {A.ldlt().solve(X.transpose() * Y), Y.mean()};
}

inline ml::Matrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    ml::Matrix x(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) x(r, c) = 2.0 * n01(rng) + double(c);
    return x;
}

struct TreeFixture {
    ml::Matrix x;
    std::vector<int> y;
};

inline TreeFixture tree_fixture(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TreeFixture f{ml::Matrix(n, d), std::vector<int>(n)};
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            f.x(r, c) = u(rng);
            s += (c % 2 ? -1.0 : 1.0) * f.x(r, c);
        }
        f.y[r] = s + 0.3 * (u(rng) - 0.5) > 0.0 ? 1 : 0;
    }
    return f;
}

struct RootSplit {
    std::size_t feature;
    double threshold;
    double impurity;
};

// Every (feature, midpoint) pair scored by weighted child Gini; first
// strict minimum in (feature, threshold) order wins.
inline RootSplit enumerate_root(const TreeFixture& f) {
    RootSplit best{0, 0.0, 2.0};
    const std::size_t n = f.x.rows();
    for (std::size_t c = 0; c < f.x.cols(); ++c) {
        std::set<double> values;
        for (std::size_t r = 0; r < n; ++r) values.insert(f.x(r, c));
        std::vector<double> sorted(values.begin(), values.end());
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            const double t = sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0;
            std::array<std::size_t, 2> left{}, right{};
            for (std::size_t r = 0; r < n; ++r) (f.x(r, c) <= t ? left : right)[f.y[r]]++;
            const double nl = double(left[0] + left[1]), nr = double(right[0] + right[1]);
            const double imp = (nl * gini_pair(left[0], left[1]) + nr * gini_pair(right[0], right[1])) / double(n);
            if (imp < best.impurity) best = {c, t, imp};
        }
    }
    return best;
}

inline std::array<double, load::kHoursPerDay> evening_peak() {
    std::array<double, load::kHoursPerDay> h{};
    for (std::size_t i = 0; i < load::kHoursPerDay; ++i)
        h[i] = 0.3 + 0.7 * std::exp(-0.1 * std::pow(double(i) - 19.0, 2));
    h[19] = 1.0;
    return h;
}

inline load::LoadProfile two_components() {
    load::LoadComponent core{"residential", 4.0, 0.5, 0.0, load::TimeProfile(evening_peak())};
    load::LoadComponent ring{"commercial", 2.5, 2.0, 3.0, load::TimeProfile()};
    return load::LoadProfile({core, ring});
}

// Midpoint rule on a uniform cells x cells grid; cell edges land on whole
// hours when the time span is whole hours and cells is a multiple of it.
inline double midpoint_total(const load::LoadProfile& profile, load::Interval r, load::Interval t, int cells) {
    const double hr = (r.hi - r.lo) / cells, ht = (t.hi - t.lo) / cells;
    double total = 0.0;
    for (int j = 0; j < cells; ++j) {
        const double tt = t.lo + (j + 0.5) * ht;
        double inner = 0.0;
        for (int i = 0; i < cells; ++i) {
            const double rr = r.lo + (i + 0.5) * hr;
            double q = 0.0;
            for (const auto& c : profile.components())
                q += c.peak_density * std::exp(-c.width * (rr - c.peak_radius) * (rr - c.peak_radius)) * c.beta(tt);
            inner += q * 2.0 * std::numbers::pi * rr;
        }
        total += inner * hr;
    }
    return total * ht;
}

struct Scenario {
    std::vector<attack::CustomerDemand> customers;
    std::set<std::string> compromised;
    double capacity;
};

inline Scenario random_scenario(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> demand(0.0, 10.0), inflate(0.0, 5.0);
    Scenario s;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = demand(rng);
        const bool attacked = rng() % 3 == 0;
        s.customers.push_back({"c" + std::to_string(i), t, attacked ? t + inflate(rng) : t});
        if (attacked || rng() % 7 == 0) s.compromised.insert("c" + std::to_string(i));
    }
    s.capacity = demand(rng) * double(n);
    return s;
}

// Keep the compromised customers, then add up reported minus true demand.
inline double filter_then_sum(const Scenario& s) {
    double total = 0.0;
    for (const auto& c : s.customers)
        if (s.compromised.count(c.id)) total += c.reported_demand - c.true_demand;
    return total;
}

}  // namespace gridstab::oracle
