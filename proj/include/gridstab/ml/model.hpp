#pragma once

#include "gridstab/core_data.hpp"
#include "gridstab/ml/linear.hpp"
#include "gridstab/ml/metrics.hpp"
#include "gridstab/ml/net.hpp"
#include "gridstab/ml/tree.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace gridstab::ml {

enum class ModelKind { Tree, Forest, Ridge, Lasso, Logistic, Net };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts tree, forest, ridge, lasso, logistic, net.
ModelKind parse_model_kind(std::string_view name);

/// Model choice plus every hyperparameter; only the fields relevant to
/// `kind` are used.
struct ModelSpec {
    ModelKind kind = ModelKind::Forest;
    TreeParams tree;
    ForestParams forest;
    Penalty penalty;  // ridge and logistic use it as given; lasso forces L1
    OptimizerSettings settings{0.1, 1e-8, 10000, false};
    std::vector<std::size_t> hidden{16};
    Activation hidden_activation = Activation::Tanh;
    Task net_task = Task::Classification;

    nlohmann::json to_json() const;
    /// Fields missing from `doc` keep their defaults. Throws BadConfig.
    static ModelSpec from_json(const nlohmann::json& doc);
};

using Predictor = std::variant<DecisionTree, RandomForest, LinearNeuron, NeuronNet>;

/// A fitted model with everything needed to reproduce its predictions.
class Model {
public:
    Model(ModelSpec spec, std::uint64_t seed, LabelConvention convention, Predictor predictor);

    ModelKind kind() const noexcept { return spec_.kind; }
    const ModelSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const LabelConvention& convention() const noexcept { return convention_; }
    const Predictor& predictor() const noexcept { return predictor_; }
    std::size_t feature_count() const noexcept;

    /// True for models that predict stab (ridge, lasso, regression net);
    /// their class is the label the convention gives the predicted stab.
    bool predicts_stab() const noexcept;
    int predict_class(std::span<const double> x) const;
    /// Predicted stab; only for models where predicts_stab() holds.
    double predict_stab(std::span<const double> x) const;

    nlohmann::json to_json() const;
    /// Throws SchemaMismatch when the document's feature schema differs.
    static Model from_json(const nlohmann::json& doc);

private:
    ModelSpec spec_;
    std::uint64_t seed_ = 0;
    LabelConvention convention_;
    Predictor predictor_;
};

/// Fits the configured model; labels are encoded stable = 1.
Model fit_model(const Dataset& train, const ModelSpec& spec, std::uint64_t seed,
                const LabelConvention& convention = LabelConvention::paper());

/// Classification metrics over all test rows, plus rmse and r^2 against stab
/// for stab-predicting models. Throws EmptyTestSet, SchemaMismatch.
Metrics evaluate(const Model& model, const Dataset& test);

}  // namespace gridstab::ml
