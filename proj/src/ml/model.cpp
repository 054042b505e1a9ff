#include "gridstab/ml/model.hpp"

#include "gridstab/error.hpp"
#include "gridstab/seeding.hpp"

#include <algorithm>
#include <set>

namespace gridstab::ml {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Tree: return "tree";
        case ModelKind::Forest: return "forest";
        case ModelKind::Ridge: return "ridge";
        case ModelKind::Lasso: return "lasso";
        case ModelKind::Logistic: return "logistic";
        case ModelKind::Net: return "net";
    }
    return "forest";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto k : {ModelKind::Tree, ModelKind::Forest, ModelKind::Ridge, ModelKind::Lasso,
                   ModelKind::Logistic, ModelKind::Net})
        if (to_string(k) == name) return k;
    throw Error(ErrorKind::BadConfig, "unknown model '" + std::string(name) + "'");
}

nlohmann::json ModelSpec::to_json() const {
    nlohmann::json doc{{"kind", ml::to_string(kind)}};
    switch (kind) {
        case ModelKind::Tree:
            doc["max_depth"] = tree.max_depth;
            doc["min_samples_split"] = tree.min_samples_split;
            break;
        case ModelKind::Forest:
            doc["n_trees"] = forest.n_trees;
            doc["features_per_split"] = forest.features_per_split;
            doc["max_depth"] = forest.max_depth;
            doc["min_samples_split"] = forest.min_samples_split;
            doc["bootstrap"] = forest.bootstrap;
            break;
        case ModelKind::Net:
            doc["hidden"] = hidden;
            doc["activation"] = ml::to_string(hidden_activation);
            doc["task"] = net_task == Task::Classification ? "classification" : "regression";
            [[fallthrough]];
        case ModelKind::Ridge:
        case ModelKind::Lasso:
        case ModelKind::Logistic:
            doc["penalty"] = {{"kind", ml::to_string(penalty.kind)}, {"lambda", penalty.lambda}};
            doc["learning_rate"] = settings.learning_rate;
            doc["tolerance"] = settings.tolerance;
            doc["max_iterations"] = settings.max_iterations;
            doc["require_convergence"] = settings.require_convergence;
            break;
    }
    return doc;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& doc) {
    static const std::set<std::string> known{
        "kind",    "max_depth",     "min_samples_split", "n_trees",   "features_per_split",
        "bootstrap", "penalty",     "learning_rate",     "tolerance", "max_iterations",
        "require_convergence", "hidden", "activation",   "task"};
    if (!doc.is_object()) throw Error(ErrorKind::BadConfig, "model spec must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown model field '" + key + "'");
    ModelSpec spec;
    try {
        if (doc.contains("kind")) spec.kind = parse_model_kind(doc["kind"].get<std::string>());
        if (doc.contains("max_depth")) {
            const int depth = doc["max_depth"].is_null() ? kUnlimitedDepth : doc["max_depth"].get<int>();
            spec.tree.max_depth = spec.forest.max_depth = depth;
        }
        if (doc.contains("min_samples_split"))
            spec.tree.min_samples_split = spec.forest.min_samples_split =
                doc["min_samples_split"].get<std::size_t>();
        if (doc.contains("n_trees")) spec.forest.n_trees = doc["n_trees"].get<std::size_t>();
        if (doc.contains("features_per_split"))
            spec.forest.features_per_split = doc["features_per_split"].get<std::size_t>();
        if (doc.contains("bootstrap")) spec.forest.bootstrap = doc["bootstrap"].get<bool>();
        if (doc.contains("penalty")) {
            const auto& p = doc["penalty"];
            if (p.contains("kind")) spec.penalty.kind = parse_penalty_kind(p["kind"].get<std::string>());
            if (p.contains("lambda")) spec.penalty.lambda = p["lambda"].get<double>();
        }
        if (doc.contains("learning_rate")) spec.settings.learning_rate = doc["learning_rate"].get<double>();
        if (doc.contains("tolerance")) spec.settings.tolerance = doc["tolerance"].get<double>();
        if (doc.contains("max_iterations"))
            spec.settings.max_iterations = doc["max_iterations"].get<std::size_t>();
        if (doc.contains("require_convergence"))
            spec.settings.require_convergence = doc["require_convergence"].get<bool>();
        if (doc.contains("hidden")) spec.hidden = doc["hidden"].get<std::vector<std::size_t>>();
        if (doc.contains("activation"))
            spec.hidden_activation = parse_activation(doc["activation"].get<std::string>());
        if (doc.contains("task")) {
            const auto task = doc["task"].get<std::string>();
            if (task != "classification" && task != "regression")
                throw Error(ErrorKind::BadConfig, "unknown net task '" + task + "'");
            spec.net_task = task == "classification" ? Task::Classification : Task::Regression;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadConfig, std::string("model spec: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::BadConfig, e.what());
    }
    return spec;
}

Model::Model(ModelSpec spec, std::uint64_t seed, LabelConvention convention, Predictor predictor)
    : spec_(std::move(spec)), seed_(seed), convention_(convention), predictor_(std::move(predictor)) {}

std::size_t Model::feature_count() const noexcept {
    return std::visit([](const auto& p) { return p.feature_count(); }, predictor_);
}

bool Model::predicts_stab() const noexcept {
    return spec_.kind == ModelKind::Ridge || spec_.kind == ModelKind::Lasso ||
           (spec_.kind == ModelKind::Net && spec_.net_task == Task::Regression);
}

double Model::predict_stab(std::span<const double> x) const {
    if (!predicts_stab())
        throw Error(ErrorKind::BadParams, std::string(to_string(spec_.kind)) + " does not predict stab");
    if (const auto* lin = std::get_if<LinearNeuron>(&predictor_)) return lin->predict_value(x);
    return std::get<NeuronNet>(predictor_).predict_value(x);
}

int Model::predict_class(std::span<const double> x) const {
    if (x.size() != feature_count())
        throw Error(ErrorKind::SchemaMismatch, "expected " + std::to_string(feature_count()) +
                                                   " features, got " + std::to_string(x.size()));
    if (predicts_stab()) return convention_.label_for(predict_stab(x)) == Label::Stable ? 1 : 0;
    return std::visit([&](const auto& p) { return p.predict_class(x); }, predictor_);
}

nlohmann::json Model::to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (auto name : kFeatureNames) features.push_back(name);
    nlohmann::json body = std::visit([](const auto& p) { return p.to_json(); }, predictor_);
    return {{"schema_version", kSchemaVersion},
            {"features", features},
            {"spec", spec_.to_json()},
            {"seed", seed_},
            {"label_convention", convention_.name()},
            {"model", body}};
}

Model Model::from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("schema_version").get<int>() != kSchemaVersion)
            throw Error(ErrorKind::SchemaMismatch, "model schema version differs from this build");
        const auto features = doc.at("features").get<std::vector<std::string>>();
        if (features.size() != kFeatureCount ||
            !std::equal(features.begin(), features.end(), kFeatureNames.begin()))
            throw Error(ErrorKind::SchemaMismatch, "model feature columns differ from the dataset schema");
        const ModelSpec spec = ModelSpec::from_json(doc.at("spec"));
        const auto conv = parse_convention(doc.at("label_convention").get<std::string>());
        if (!conv) throw Error(ErrorKind::BadConfig, "unknown label convention in model file");
        const auto& body = doc.at("model");
        Predictor predictor;
        switch (spec.kind) {
            case ModelKind::Tree: predictor = DecisionTree::from_json(body, kFeatureCount); break;
            case ModelKind::Forest: predictor = RandomForest::from_json(body, kFeatureCount); break;
            case ModelKind::Ridge:
            case ModelKind::Lasso:
            case ModelKind::Logistic: predictor = LinearNeuron::from_json(body); break;
            case ModelKind::Net: predictor = NeuronNet::from_json(body); break;
        }
        Model model(spec, doc.at("seed").get<std::uint64_t>(), *conv, std::move(predictor));
        if (model.feature_count() != kFeatureCount)
            throw Error(ErrorKind::SchemaMismatch, "model input width differs from the dataset schema");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadConfig, std::string("model file: ") + e.what());
    }
}

Model fit_model(const Dataset& train, const ModelSpec& spec, std::uint64_t seed,
                const LabelConvention& convention) {
    if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    const Matrix x = feature_matrix(train);
    const std::vector<int> labels = encode_labels(train);
    const std::vector<double> stab = train.stab_values();
    Predictor predictor;
    switch (spec.kind) {
        case ModelKind::Tree: predictor = fit_tree(x, labels, spec.tree); break;
        case ModelKind::Forest: {
            ForestParams fp = spec.forest;
            fp.seed = seed;
            predictor = fit_forest(x, labels, fp);
            break;
        }
        case ModelKind::Ridge: {
            Penalty p = spec.penalty;
            if (p.kind == PenaltyKind::L1) p.kind = PenaltyKind::L2;
            predictor = fit_penalized_linear(x, stab, p, spec.settings);
            break;
        }
        case ModelKind::Lasso:
            predictor = fit_penalized_linear(x, stab, {PenaltyKind::L1, spec.penalty.lambda}, spec.settings);
            break;
        case ModelKind::Logistic: predictor = fit_logistic(x, labels, spec.penalty, spec.settings); break;
        case ModelKind::Net: {
            NetParams np;
            np.hidden = spec.hidden;
            np.hidden_activation = spec.hidden_activation;
            np.task = spec.net_task;
            np.penalty = spec.penalty;
            np.settings = spec.settings;
            np.seed = derive_seed(seed, seed_stream::init, 0);
            std::vector<double> y(labels.begin(), labels.end());
            predictor = fit_neuron_net(x, spec.net_task == Task::Classification ? std::span<const double>(y)
                                                                                 : std::span<const double>(stab),
                                       np);
            break;
        }
    }
    return Model(spec, seed, convention, std::move(predictor));
}

Metrics evaluate(const Model& model, const Dataset& test) {
    if (test.empty()) throw Error(ErrorKind::EmptyTestSet, "no test rows to evaluate");
    if (model.feature_count() != kFeatureCount || test.schema_version() != kSchemaVersion)
        throw Error(ErrorKind::SchemaMismatch, "model and test set schemas differ");
    const std::vector<int> truth = encode_labels(test);
    std::vector<int> predicted(test.size());
    std::vector<double> stab_pred;
    if (model.predicts_stab()) stab_pred.resize(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto f = test[i].features();
        if (model.predicts_stab()) {
            stab_pred[i] = model.predict_stab(f);
            predicted[i] = model.convention().label_for(stab_pred[i]) == Label::Stable ? 1 : 0;
        } else {
            predicted[i] = model.predict_class(f);
        }
    }
    Metrics m;
    m.classification = classification_metrics(truth, predicted);
    if (model.predicts_stab()) m.regression = regression_metrics(test.stab_values(), stab_pred);
    return m;
}

}  // namespace gridstab::ml
