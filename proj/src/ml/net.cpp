#include "gridstab/ml/net.hpp"

#include "gridstab/error.hpp"
#include "ml/descent.hpp"

#include <cmath>
#include <random>

namespace gridstab::ml {

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw Error(ErrorKind::BadParams, "unknown activation '" + std::string(name) + "'");
}

namespace {

double activate(Activation a, double z) noexcept {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Sigmoid: return sigmoid(z);
    }
    return z;
}

// Derivative expressed through the activation's output.
double activate_prime(Activation a, double out) noexcept {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - out * out;
        case Activation::Sigmoid: return out * (1.0 - out);
    }
    return 1.0;
}

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

NeuronNet::NeuronNet(std::vector<DenseLayer> layers, Task task, Standardizer standardizer)
    : layers_(std::move(layers)), task_(task), standardizer_(std::move(standardizer)) {
    if (layers_.empty()) throw Error(ErrorKind::BadParams, "a network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.inputs == 0 || layer.outputs == 0)
            throw Error(ErrorKind::BadParams, "layer dimensions must be >= 1");
        if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs)
            throw Error(ErrorKind::BadParams, "layer parameters do not match its dimensions");
        if (l > 0 && layers_[l - 1].outputs != layer.inputs)
            throw Error(ErrorKind::BadParams, "consecutive layer dimensions do not chain");
    }
    if (layers_.back().outputs != 1) throw Error(ErrorKind::BadParams, "the output layer must have one unit");
    if (standardizer_.mean.size() != layers_.front().inputs ||
        standardizer_.scale.size() != layers_.front().inputs)
        throw Error(ErrorKind::SchemaMismatch, "standardizer does not match the input layer");
}

NeuronNet NeuronNet::initialize(std::size_t inputs, const NetParams& params,
                                Standardizer standardizer) {
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> init(-params.init_scale, params.init_scale);
    std::vector<DenseLayer> layers;
    std::size_t fan_in = inputs;
    auto add = [&](std::size_t outputs, Activation act) {
        DenseLayer layer{fan_in, outputs, std::vector<double>(fan_in * outputs),
                         std::vector<double>(outputs), act};
        for (auto& w : layer.weights) w = init(rng);
        for (auto& b : layer.bias) b = init(rng);
        layers.push_back(std::move(layer));
        fan_in = outputs;
    };
    for (std::size_t width : params.hidden) add(width, params.hidden_activation);
    add(1, params.task == Task::Classification ? Activation::Sigmoid : Activation::Identity);
    return NeuronNet(std::move(layers), params.task, std::move(standardizer));
}

std::size_t NeuronNet::feature_count() const noexcept {
    return layers_.empty() ? 0 : layers_.front().inputs;
}

double NeuronNet::forward_standardized(std::span<const double> xs, double* logit) const {
    std::vector<double> in(xs.begin(), xs.end()), out;
    double z = 0.0;
    for (const auto& layer : layers_) {
        out.assign(layer.outputs, 0.0);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            z = layer.bias[o];
            const double* w = layer.weights.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
            out[o] = activate(layer.activation, z);
        }
        in.swap(out);
    }
    if (logit) *logit = z;
    return in[0];
}

double NeuronNet::predict_value(std::span<const double> x) const {
    if (x.size() != feature_count())
        throw Error(ErrorKind::SchemaMismatch, "expected " + std::to_string(feature_count()) +
                                                   " features, got " + std::to_string(x.size()));
    std::vector<double> xs(x.size());
    standardizer_.apply(x, xs);
    return forward_standardized(xs);
}

int NeuronNet::predict_class(std::span<const double> x) const {
    const double v = predict_value(x);
    return task_ == Task::Classification ? (v >= 0.5 ? 1 : 0) : (v > 0.0 ? 1 : 0);
}

std::size_t NeuronNet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<double> NeuronNet::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void NeuronNet::set_parameters(std::span<const double> packed) {
    if (packed.size() != parameter_count())
        throw Error(ErrorKind::LengthMismatch, "packed parameter vector has the wrong length");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (auto& w : l.weights) w = packed[k++];
        for (auto& b : l.bias) b = packed[k++];
    }
}

std::vector<bool> NeuronNet::weight_mask() const {
    std::vector<bool> mask;
    mask.reserve(parameter_count());
    for (const auto& l : layers_) {
        mask.insert(mask.end(), l.weights.size(), true);
        mask.insert(mask.end(), l.bias.size(), false);
    }
    return mask;
}

nlohmann::json NeuronNet::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_)
        layers.push_back({{"inputs", l.inputs},
                          {"outputs", l.outputs},
                          {"activation", to_string(l.activation)},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    return {{"task", task_ == Task::Classification ? "classification" : "regression"},
            {"layers", layers},
            {"standardizer", {{"mean", standardizer_.mean}, {"scale", standardizer_.scale}}},
            {"diagnostics",
             {{"iterations", diagnostics.iterations},
              {"gradient_norm", diagnostics.gradient_norm},
              {"converged", diagnostics.converged}}}};
}

NeuronNet NeuronNet::from_json(const nlohmann::json& doc) {
    std::vector<DenseLayer> layers;
    for (const auto& l : doc.at("layers"))
        layers.push_back({l.at("inputs").get<std::size_t>(), l.at("outputs").get<std::size_t>(),
                          l.at("weights").get<std::vector<double>>(),
                          l.at("bias").get<std::vector<double>>(),
                          parse_activation(l.at("activation").get<std::string>())});
    const auto task_name = doc.at("task").get<std::string>();
    if (task_name != "classification" && task_name != "regression")
        throw Error(ErrorKind::BadParams, "unknown task '" + task_name + "'");
    NeuronNet net(std::move(layers), task_name == "classification" ? Task::Classification : Task::Regression,
                  Standardizer{doc.at("standardizer").at("mean").get<std::vector<double>>(),
                               doc.at("standardizer").at("scale").get<std::vector<double>>()});
    if (doc.contains("diagnostics")) {
        const auto& d = doc["diagnostics"];
        net.diagnostics.iterations = d.value("iterations", std::size_t{0});
        net.diagnostics.gradient_norm = d.value("gradient_norm", 0.0);
        net.diagnostics.converged = d.value("converged", false);
    }
    return net;
}

double net_objective(const NeuronNet& net, const Matrix& xs, std::span<const double> y,
                     const Penalty& penalty, std::vector<double>* grad) {
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    const auto n = static_cast<double>(xs.rows());
    if (grad) grad->assign(net.parameter_count(), 0.0);

    std::vector<std::size_t> offset(depth);
    for (std::size_t l = 0, k = 0; l < depth; ++l) {
        offset[l] = k;
        k += layers[l].weights.size() + layers[l].bias.size();
    }

    // acts[0] is the input; acts[l + 1] the output of layer l.
    std::vector<std::vector<double>> acts(depth + 1);
    for (std::size_t l = 0; l < depth; ++l) acts[l + 1].resize(layers[l].outputs);
    std::vector<double> delta, prev_delta;

    detail::CompensatedSum total;
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        acts[0].assign(row.begin(), row.end());
        double logit = 0.0;
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& layer = layers[l];
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                double z = layer.bias[o];
                const double* w = layer.weights.data() + o * layer.inputs;
                for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * acts[l][i];
                acts[l + 1][o] = activate(layer.activation, z);
                logit = z;
            }
        }
        double dloss;
        if (net.task() == Task::Classification) {
            total.add(softplus(logit) - y[r] * logit);
            dloss = sigmoid(logit) - y[r];
        } else {
            const double e = acts[depth][0] - y[r];
            total.add(e * e);
            dloss = 2.0 * e * activate_prime(layers.back().activation, acts[depth][0]);
        }
        if (!grad) continue;

        delta.assign(1, dloss / n);
        for (std::size_t l = depth; l-- > 0;) {
            const auto& layer = layers[l];
            double* gw = grad->data() + offset[l];
            double* gb = gw + layer.weights.size();
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                for (std::size_t i = 0; i < layer.inputs; ++i)
                    gw[o * layer.inputs + i] += delta[o] * acts[l][i];
                gb[o] += delta[o];
            }
            if (l == 0) break;
            prev_delta.assign(layer.inputs, 0.0);
            for (std::size_t o = 0; o < layer.outputs; ++o)
                for (std::size_t i = 0; i < layer.inputs; ++i)
                    prev_delta[i] += layer.weights[o * layer.inputs + i] * delta[o];
            const auto& below = layers[l - 1];
            for (std::size_t i = 0; i < layer.inputs; ++i)
                prev_delta[i] *= activate_prime(below.activation, acts[l][i]);
            delta.swap(prev_delta);
        }
    }
    double loss = total.value() / n;

    for (std::size_t l = 0; l < depth; ++l) {
        loss += penalty.value(layers[l].weights);
        if (grad && penalty.kind == PenaltyKind::L2) {
            double* gw = grad->data() + offset[l];
            for (std::size_t i = 0; i < layers[l].weights.size(); ++i)
                gw[i] += 2.0 * penalty.lambda * layers[l].weights[i];
        }
    }
    return loss;
}

NeuronNet fit_neuron_net(const Matrix& x, std::span<const double> y, const NetParams& params,
                         bool standardize) {
    if (x.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "features and targets differ in length");
    for (double v : x.data())
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "non-finite feature value");
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "non-finite target value");
        if (params.task == Task::Classification && v != 0.0 && v != 1.0)
            throw Error(ErrorKind::BadParams, "classification targets must be 0 or 1");
    }
    if (!(params.penalty.lambda >= 0.0) || !std::isfinite(params.penalty.lambda))
        throw Error(ErrorKind::BadParams, "penalty strength must be finite and >= 0");
    if (!(params.settings.learning_rate > 0.0) || params.settings.max_iterations == 0)
        throw Error(ErrorKind::BadParams, "learning rate must be > 0 and max_iterations >= 1");
    for (std::size_t width : params.hidden)
        if (width == 0) throw Error(ErrorKind::BadParams, "hidden layer widths must be >= 1");

    Standardizer st = standardize ? Standardizer::fit(x) : Standardizer::identity(x.cols());
    const Matrix xs = standardize ? st.transform(x) : x;
    NeuronNet net = NeuronNet::initialize(x.cols(), params, std::move(st));

    const bool l1 = params.penalty.kind == PenaltyKind::L1;
    const Penalty smooth_penalty = l1 ? Penalty{PenaltyKind::None, 0.0} : params.penalty;
    NeuronNet scratch = net;
    detail::PackedObjective smooth = [&](std::span<const double> p, std::vector<double>* g) {
        scratch.set_parameters(p);
        return net_objective(scratch, xs, y, smooth_penalty, g);
    };
    detail::PackedObjective full = [&](std::span<const double> p, std::vector<double>*) {
        scratch.set_parameters(p);
        return net_objective(scratch, xs, y, params.penalty);
    };
    std::vector<double> packed = net.parameters();
    FitDiagnostics diag = detail::descend(smooth, full, packed, params.settings,
                                          l1 ? params.penalty.lambda : 0.0, net.weight_mask());
    detail::finish(diag, params.settings);
    net.set_parameters(packed);
    net.diagnostics = std::move(diag);
    return net;
}

}  // namespace gridstab::ml
