#include "gridstab/error.hpp"
#include "gridstab/ml/linear.hpp"
#include "gridstab/ml/net.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gridstab;
using namespace gridstab::ml;
using gridstab::oracle::random_matrix;
using gridstab::oracle::relative_gap;

namespace {

std::pair<Eigen::VectorXd, double> ridge_oracle(const Matrix& x, std::span<const double> y, double lambda) {
    return oracle::ridge(Standardizer::fit(x).transform(x), y, lambda);
}

}  // namespace


TEST(Ridge, RecoversRealizableCoefficients) {
    std::mt19937_64 rng(1);
    const Matrix x = random_matrix(60, 3, rng);
    std::vector<double> y(60);
    for (std::size_t r = 0; r < 60; ++r) y[r] = 1.5 * x(r, 0) - 2.0 * x(r, 1) + 0.25 * x(r, 2) + 3.0;
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::None, 0.0});
    // Weights live in standardized space; map back to raw units.
    const auto& st = fit.standardizer();
    const double expected[] = {1.5, -2.0, 0.25};
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(fit.weights()[c] / st.scale[c], expected[c], 1e-6);
    for (std::size_t r = 0; r < 60; ++r) EXPECT_NEAR(fit.predict_value(x.row(r)), y[r], 1e-6);
}

TEST(Ridge, MatchesNormalEquationsOnRandomProblems) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 20 + rng() % 60, d = 1 + rng() % 10;
        const double lambda = std::pow(10.0, -3.0 + 3.0 * double(rng() % 1000) / 1000.0);
        const Matrix x = random_matrix(n, d, rng);
        std::vector<double> y(n);
        for (std::size_t r = 0; r < n; ++r) y[r] = x(r, 0) - 0.5 * x(r, d - 1) + n01(rng);
        const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L2, lambda}, {0.5, 1e-10, 500000, true});
        const auto [w, b] = ridge_oracle(x, y, lambda);
        for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(fit.weights()[c], w(Eigen::Index(c)), 1e-6) << trial;
        EXPECT_NEAR(fit.bias(), b, 1e-6);
        EXPECT_TRUE(fit.diagnostics.converged);
    }
}

TEST(Ridge, TwoFeatureClosedForm) {
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(40, 2, rng);
    std::vector<double> y(40);
    std::normal_distribution<double> n01;
    for (std::size_t r = 0; r < 40; ++r) y[r] = 0.7 * x(r, 0) + 0.2 * x(r, 1) + 0.1 * n01(rng);
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L2, 0.1});
    const auto [w, b] = ridge_oracle(x, y, 0.1);
    EXPECT_NEAR(fit.weights()[0], w(0), 1e-6);
    EXPECT_NEAR(fit.weights()[1], w(1), 1e-6);
}

TEST(Ridge, HugePenaltyPredictsMean) {
    std::mt19937_64 rng(4);
    const Matrix x = random_matrix(50, 4, rng);
    std::vector<double> y(50);
    double mean = 0.0;
    for (std::size_t r = 0; r < 50; ++r) mean += (y[r] = x(r, 1) * 3.0 + 1.0);
    mean /= 50.0;
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L2, 1e3}, {5e-4, 1e-5, 200000, true});
    for (double w : fit.weights()) EXPECT_LT(std::abs(w), 0.01);
    EXPECT_NEAR(fit.bias(), mean, 1e-4);
    double spread = 0.0;
    for (std::size_t r = 0; r < 50; ++r) spread = std::max(spread, std::abs(fit.predict_value(x.row(r)) - mean));
    EXPECT_LT(spread, 0.01 * 6.0);
}

TEST(Ridge, LossNeverIncreases) {
    std::mt19937_64 rng(5);
    const Matrix x = random_matrix(80, 5, rng);
    std::vector<double> y(80);
    std::normal_distribution<double> n01;
    for (auto& v : y) v = n01(rng);
    OptimizerSettings s;
    s.learning_rate = 5.0;  // far too large: forces backtracking
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L2, 1e-2}, s);
    const auto& h = fit.diagnostics.loss_history;
    ASSERT_GT(h.size(), 2u);
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
}

TEST(Ridge, NoConvergenceReportsGradientNorm) {
    std::mt19937_64 rng(6);
    const Matrix x = random_matrix(30, 3, rng);
    std::vector<double> y(30, 1.0);
    y[0] = 5.0;
    OptimizerSettings s;
    s.max_iterations = 3;
    try {
        fit_penalized_linear(x, y, {}, s);
        FAIL();
    } catch (const NoConvergenceError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
        EXPECT_GT(e.gradient_norm(), 1e-8);
        EXPECT_EQ(e.iterations(), 3u);
    }
    s.require_convergence = false;
    EXPECT_FALSE(fit_penalized_linear(x, y, {}, s).diagnostics.converged);
}

TEST(Ridge, RejectsNonFiniteData) {
    Matrix x(3, 1, {1.0, NAN, 2.0});
    const std::vector<double> y{1, 2, 3};
    try {
        fit_penalized_linear(x, y);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteData);
    }
}

TEST(Ridge, InternalAndExternalStandardizationAgree) {
    std::mt19937_64 rng(7);
    const Matrix x = random_matrix(50, 3, rng);
    std::vector<double> y(50);
    for (std::size_t r = 0; r < 50; ++r) y[r] = x(r, 0) - x(r, 2);
    const auto internal = fit_penalized_linear(x, y, {PenaltyKind::L2, 0.01});
    const Matrix xs = Standardizer::fit(x).transform(x);
    const auto external = fit_penalized_linear(xs, y, {PenaltyKind::L2, 0.01}, {}, false);
    for (std::size_t r = 0; r < 50; ++r)
        EXPECT_NEAR(internal.predict_value(x.row(r)), external.predict_value(xs.row(r)), 1e-9);
}

TEST(Lasso, SoftThresholdOnOrthogonalDesign) {
    // Standardized orthogonal columns make coordinate descent exact:
    // w_j = S(x_j'y / n, lambda / 2).
    const std::size_t n = 8;
    Matrix x(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
        x(r, 0) = r % 2 ? 1.0 : -1.0;
        x(r, 1) = (r / 2) % 2 ? 1.0 : -1.0;
    }
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) y[r] = 0.8 * x(r, 0) + 0.05 * x(r, 1) + 2.0;
    const double lambda = 0.2;
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L1, lambda});
    EXPECT_NEAR(fit.weights()[0], 0.8 - lambda / 2.0, 1e-12);
    EXPECT_EQ(fit.weights()[1], 0.0);
    EXPECT_NEAR(fit.bias(), 2.0, 1e-12);
}

TEST(Lasso, SatisfiesOptimalityConditions) {
    std::mt19937_64 rng(8);
    const Matrix x = random_matrix(100, 6, rng);
    std::vector<double> y(100);
    std::normal_distribution<double> n01;
    for (std::size_t r = 0; r < 100; ++r) y[r] = x(r, 0) * 0.5 - x(r, 3) * 0.3 + 0.2 * n01(rng);
    const double lambda = 0.05;
    const auto fit = fit_penalized_linear(x, y, {PenaltyKind::L1, lambda}, {0.1, 1e-12, 100000, true});
    const Matrix xs = fit.standardizer().transform(x);
    std::vector<double> grad;
    double gb = 0.0;
    squared_objective(xs, y, fit.weights(), fit.bias(), {PenaltyKind::None, 0.0}, &grad, &gb);
    EXPECT_NEAR(gb, 0.0, 1e-9);
    for (std::size_t j = 0; j < 6; ++j) {
        if (fit.weights()[j] == 0.0)
            EXPECT_LE(std::abs(grad[j]), lambda + 1e-9);
        else
            EXPECT_NEAR(grad[j], -lambda * (fit.weights()[j] > 0 ? 1.0 : -1.0), 1e-8);
    }
}

TEST(Logistic, SeparableDataIsFitExactly) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(100, 2);
    std::vector<int> y(100);
    for (std::size_t r = 0; r < 100; ++r) {
        x(r, 0) = u(rng);
        x(r, 1) = u(rng);
        const double margin = x(r, 0) + 0.5 * x(r, 1);
        if (std::abs(margin) < 0.1) x(r, 0) += margin > 0 ? 0.2 : -0.2;
        y[r] = x(r, 0) + 0.5 * x(r, 1) > 0 ? 1 : 0;
    }
    OptimizerSettings s;
    s.require_convergence = false;
    const auto fit = fit_logistic(x, y, {PenaltyKind::L2, 1e-5}, s);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < 100; ++r) correct += fit.predict_class(x.row(r)) == y[r];
    EXPECT_EQ(correct, 100u);
}

TEST(Logistic, ConstantLabelsPredictThatClass) {
    std::mt19937_64 rng(10);
    const Matrix x = random_matrix(40, 3, rng);
    for (int label : {0, 1}) {
        const std::vector<int> y(40, label);
        OptimizerSettings s;
        s.require_convergence = false;
        const auto fit = fit_logistic(x, y, {}, s);
        for (std::size_t r = 0; r < 40; ++r) EXPECT_EQ(fit.predict_class(x.row(r)), label);
    }
}

TEST(Logistic, L1ProximalFitIsSparseAndAccurate) {
    std::mt19937_64 rng(11);
    const Matrix x = random_matrix(200, 5, rng);
    std::vector<int> y(200);
    for (std::size_t r = 0; r < 200; ++r) y[r] = x(r, 0) - 0.0 > 0.0 ? 1 : 0;
    OptimizerSettings s;
    s.require_convergence = false;
    const auto fit = fit_logistic(x, y, {PenaltyKind::L1, 0.05}, s);
    std::size_t zeros = 0;
    for (std::size_t j = 1; j < 5; ++j) zeros += fit.weights()[j] == 0.0;
    EXPECT_GE(zeros, 3u);
    const auto& h = fit.diagnostics.loss_history;
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
}

TEST(Gradients, SquaredAndLogisticMatchCentralDifferences) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n01;
    const Matrix xs = Standardizer::fit(random_matrix(30, 4, rng)).transform(random_matrix(30, 4, rng));
    std::vector<double> yc(30);
    std::vector<int> yb(30);
    for (std::size_t r = 0; r < 30; ++r) {
        yc[r] = n01(rng);
        yb[r] = int(rng() % 2);
    }
    const double h = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(4);
        for (auto& v : w) v = n01(rng);
        const double b = n01(rng);
        const Penalty pen{PenaltyKind::L2, 0.03};
        std::vector<double> gw;
        double gb;
        for (int which = 0; which < 2; ++which) {
            auto f = [&](const std::vector<double>& ww, double bb) {
                return which == 0 ? squared_objective(xs, yc, ww, bb, pen) : logistic_objective(xs, yb, ww, bb, pen);
            };
            if (which == 0)
                squared_objective(xs, yc, w, b, pen, &gw, &gb);
            else
                logistic_objective(xs, yb, w, b, pen, &gw, &gb);
            for (std::size_t j = 0; j < 4; ++j) {
                auto wp = w, wm = w;
                wp[j] += h;
                wm[j] -= h;
                EXPECT_LT(relative_gap(gw[j], (f(wp, b) - f(wm, b)) / (2 * h)), 1e-5);
            }
            EXPECT_LT(relative_gap(gb, (f(w, b + h) - f(w, b - h)) / (2 * h)), 1e-5);
        }
    }
}

TEST(LinearNeuron, PreActivationArithmetic) {
    const LinearNeuron unit({1.0, 2.0}, 1.0, {}, Link::Identity, Standardizer::identity(2));
    EXPECT_EQ(unit.pre_activation(std::vector<double>{3.0, 4.0}), 12.0);
    EXPECT_THROW(unit.pre_activation(std::vector<double>{3.0}), Error);
    const auto back = LinearNeuron::from_json(unit.to_json());
    EXPECT_EQ(back.pre_activation(std::vector<double>{3.0, 4.0}), 12.0);
}
