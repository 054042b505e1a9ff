#pragma once

#include "gridstab/ml/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace gridstab::ml {

/// Per-feature centering and scaling to zero mean and unit (population)
/// variance. Constant features get scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x);
    static Standardizer identity(std::size_t features);

    void apply(std::span<const double> in, std::span<double> out) const;
    Matrix transform(const Matrix& x) const;
};

enum class PenaltyKind { None, L2, L1 };

std::string_view to_string(PenaltyKind kind) noexcept;
PenaltyKind parse_penalty_kind(std::string_view name);

/// L2 adds lambda * ||w||^2, L1 adds lambda * ||w||_1; the bias is never penalised.
struct Penalty {
    PenaltyKind kind = PenaltyKind::L2;
    double lambda = 1e-3;

    double value(std::span<const double> w) const noexcept;
};

struct OptimizerSettings {
    double learning_rate = 0.1;
    double tolerance = 1e-8;
    std::size_t max_iterations = 10000;
    /// Throw NoConvergence when max_iterations runs out; otherwise the last
    /// iterate is returned with `converged == false` in its diagnostics.
    bool require_convergence = true;
};

struct FitDiagnostics {
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::vector<double> loss_history;  // objective after every accepted step
};

enum class Link { Identity, Sigmoid };

/// z = sum_i w_i x_i + b on standardized inputs, optionally squashed by a
/// sigmoid. Weights live in standardized space; the stored standardizer is
/// applied at predict time.
class LinearNeuron {
public:
    LinearNeuron() = default;
    LinearNeuron(std::vector<double> weights, double bias, Penalty penalty, Link link,
                 Standardizer standardizer);

    /// Pre-activation for a raw (unstandardized) feature vector.
    double pre_activation(std::span<const double> x) const;
    /// Identity link: z. Sigmoid link: probability of class 1.
    double predict_value(std::span<const double> x) const;
    /// Sigmoid link only: 1 iff sigmoid(z) >= 0.5.
    int predict_class(std::span<const double> x) const;

    const std::vector<double>& weights() const noexcept { return weights_; }
    double bias() const noexcept { return bias_; }
    const Penalty& penalty() const noexcept { return penalty_; }
    Link link() const noexcept { return link_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    std::size_t feature_count() const noexcept { return weights_.size(); }

    FitDiagnostics diagnostics;

    nlohmann::json to_json() const;
    static LinearNeuron from_json(const nlohmann::json& doc);

private:
    std::vector<double> weights_;
    double bias_ = 0.0;
    Penalty penalty_;
    Link link_ = Link::Identity;
    Standardizer standardizer_;
};

/// Mean squared error plus the penalty, evaluated on already-standardized
/// inputs. When gradient pointers are given they receive the gradient of the
/// smooth part (for L1 the penalty's subgradient is left out).
double squared_objective(const Matrix& xs, std::span<const double> y, std::span<const double> w,
                         double b, const Penalty& penalty, std::vector<double>* grad_w = nullptr,
                         double* grad_b = nullptr);

/// Mean logistic loss (labels 0/1) plus the penalty, same conventions.
double logistic_objective(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                          double b, const Penalty& penalty, std::vector<double>* grad_w = nullptr,
                          double* grad_b = nullptr);

/// Penalised least squares. L2/None: gradient descent from zero with
/// backtracking halving, until ||grad|| < tolerance. L1: cyclic coordinate
/// descent with soft-thresholding, until the largest coefficient change is
/// below tolerance.
LinearNeuron fit_penalized_linear(const Matrix& x, std::span<const double> y,
                                  const Penalty& penalty = {},
                                  const OptimizerSettings& settings = {},
                                  bool standardize = true);

/// Penalised logistic regression by gradient descent (proximal steps for L1).
LinearNeuron fit_logistic(const Matrix& x, std::span<const int> y, const Penalty& penalty = {},
                          const OptimizerSettings& settings = {}, bool standardize = true);

double sigmoid(double z) noexcept;

}  // namespace gridstab::ml
