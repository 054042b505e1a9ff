#pragma once

#include "gridstab/ml/linear.hpp"
#include "gridstab/ml/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gridstab::ml {

enum class Activation { Identity, Tanh, Sigmoid };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

enum class Task { Regression, Classification };

/// One affine map followed by an elementwise activation. Every unit computes
/// z = sum_i w_i x_i + b before its activation.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> bias;     // outputs
    Activation activation = Activation::Identity;
};

struct NetParams {
    std::vector<std::size_t> hidden{16};
    Activation hidden_activation = Activation::Tanh;
    Task task = Task::Classification;
    Penalty penalty;  // applies to weights, never biases
    OptimizerSettings settings;
    std::uint64_t seed = 0;
    double init_scale = 0.1;  // weights and biases start U[-init_scale, init_scale]
};

class NeuronNet {
public:
    NeuronNet() = default;
    NeuronNet(std::vector<DenseLayer> layers, Task task, Standardizer standardizer);

    /// Seeded small-uniform initialization for the given architecture.
    static NeuronNet initialize(std::size_t inputs, const NetParams& params,
                                Standardizer standardizer);

    /// Output of the final layer for an already-standardized input; its
    /// pre-activation is written to `logit` when given.
    double forward_standardized(std::span<const double> xs, double* logit = nullptr) const;
    /// Raw input: regression value or class-1 probability.
    double predict_value(std::span<const double> x) const;
    /// Classification: 1 iff the output probability is >= 0.5. Regression:
    /// 1 iff the value is > 0.
    int predict_class(std::span<const double> x) const;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    Task task() const noexcept { return task_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    std::size_t feature_count() const noexcept;

    /// Parameters packed layer by layer, weights then biases.
    std::size_t parameter_count() const noexcept;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> packed);
    /// Mask over the packed vector marking weight (penalised) entries.
    std::vector<bool> weight_mask() const;

    FitDiagnostics diagnostics;

    nlohmann::json to_json() const;
    static NeuronNet from_json(const nlohmann::json& doc);

private:
    std::vector<DenseLayer> layers_;
    Task task_ = Task::Regression;
    Standardizer standardizer_;
};

/// Training objective on standardized inputs: mean squared error (regression)
/// or mean logistic loss on the output logit (classification), plus the
/// penalty over all weights. Fills the packed gradient when `grad` is given
/// (smooth part only for L1).
double net_objective(const NeuronNet& net, const Matrix& xs, std::span<const double> y,
                     const Penalty& penalty, std::vector<double>* grad = nullptr);

/// Full-batch gradient descent with backpropagation. Targets are 0/1 for
/// classification. Throws NonFiniteLoss if the loss or gradient stops being
/// finite.
NeuronNet fit_neuron_net(const Matrix& x, std::span<const double> y, const NetParams& params = {},
                         bool standardize = true);

}  // namespace gridstab::ml
