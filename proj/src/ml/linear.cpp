#include "gridstab/ml/linear.hpp"

#include "gridstab/error.hpp"
#include "ml/descent.hpp"

#include <algorithm>
#include <cmath>

namespace gridstab::ml {

using detail::descend;
using detail::finish;
using detail::PackedObjective;

Standardizer Standardizer::fit(const Matrix& x) {
    Standardizer s;
    const std::size_t d = x.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (x.rows() == 0) return s;
    const auto n = static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(r, j);
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = x(r, j) - s.mean[j];
            var[j] += dv * dv;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / n);
        s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t features) {
    return {std::vector<double>(features, 0.0), std::vector<double>(features, 1.0)};
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

Matrix Standardizer::transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
    return out;
}

std::string_view to_string(PenaltyKind kind) noexcept {
    switch (kind) {
        case PenaltyKind::None: return "none";
        case PenaltyKind::L2: return "l2";
        case PenaltyKind::L1: return "l1";
    }
    return "none";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
    if (name == "none") return PenaltyKind::None;
    if (name == "l2" || name == "L2") return PenaltyKind::L2;
    if (name == "l1" || name == "L1") return PenaltyKind::L1;
    throw Error(ErrorKind::BadParams, "unknown penalty '" + std::string(name) + "'");
}

double Penalty::value(std::span<const double> w) const noexcept {
    double s = 0.0;
    switch (kind) {
        case PenaltyKind::None: return 0.0;
        case PenaltyKind::L2:
            for (double v : w) s += v * v;
            return lambda * s;
        case PenaltyKind::L1:
            for (double v : w) s += std::abs(v);
            return lambda * s;
    }
    return 0.0;
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void add_penalty_gradient(const Penalty& penalty, std::span<const double> w,
                          std::vector<double>& grad) {
    if (penalty.kind == PenaltyKind::L2)
        for (std::size_t j = 0; j < w.size(); ++j) grad[j] += 2.0 * penalty.lambda * w[j];
}

void check_inputs(const Matrix& x, std::size_t targets, const Penalty& penalty,
                  const OptimizerSettings& settings) {
    if (x.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    if (x.rows() != targets) throw Error(ErrorKind::LengthMismatch, "features and targets differ in length");
    for (double v : x.data())
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "non-finite feature value");
    if (!(penalty.lambda >= 0.0) || !std::isfinite(penalty.lambda))
        throw Error(ErrorKind::BadParams, "penalty strength must be finite and >= 0");
    if (!(settings.learning_rate > 0.0) || settings.max_iterations == 0)
        throw Error(ErrorKind::BadParams, "learning rate must be > 0 and max_iterations >= 1");
}

}  // namespace

double squared_objective(const Matrix& xs, std::span<const double> y, std::span<const double> w,
                         double b, const Penalty& penalty, std::vector<double>* grad_w,
                         double* grad_b) {
    const std::size_t d = xs.cols();
    const auto n = static_cast<double>(xs.rows());
    if (grad_w) grad_w->assign(d, 0.0);
    detail::CompensatedSum loss;
    double gb = 0.0;
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        const double e = dot(row, w) + b - y[r];
        loss.add(e * e);
        if (grad_w) {
            for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] += 2.0 * e * row[j];
            gb += 2.0 * e;
        }
    }
    if (grad_w) {
        for (auto& g : *grad_w) g /= n;
        add_penalty_gradient(penalty, w, *grad_w);
    }
    if (grad_b) *grad_b = gb / n;
    return loss.value() / n + penalty.value(w);
}

double logistic_objective(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                          double b, const Penalty& penalty, std::vector<double>* grad_w,
                          double* grad_b) {
    const std::size_t d = xs.cols();
    const auto n = static_cast<double>(xs.rows());
    if (grad_w) grad_w->assign(d, 0.0);
    detail::CompensatedSum loss;
    double gb = 0.0;
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        const double z = dot(row, w) + b;
        loss.add(softplus(z) - (y[r] == 1 ? z : 0.0));
        if (grad_w) {
            const double e = sigmoid(z) - static_cast<double>(y[r]);
            for (std::size_t j = 0; j < d; ++j) (*grad_w)[j] += e * row[j];
            gb += e;
        }
    }
    if (grad_w) {
        for (auto& g : *grad_w) g /= n;
        add_penalty_gradient(penalty, w, *grad_w);
    }
    if (grad_b) *grad_b = gb / n;
    return loss.value() / n + penalty.value(w);
}

LinearNeuron::LinearNeuron(std::vector<double> weights, double bias, Penalty penalty, Link link,
                           Standardizer standardizer)
    : weights_(std::move(weights)),
      bias_(bias),
      penalty_(penalty),
      link_(link),
      standardizer_(std::move(standardizer)) {
    if (standardizer_.mean.size() != weights_.size() || standardizer_.scale.size() != weights_.size())
        throw Error(ErrorKind::SchemaMismatch, "standardizer does not match the weight vector");
}

double LinearNeuron::pre_activation(std::span<const double> x) const {
    if (x.size() != weights_.size())
        throw Error(ErrorKind::SchemaMismatch, "expected " + std::to_string(weights_.size()) +
                                                   " features, got " + std::to_string(x.size()));
    double z = bias_;
    for (std::size_t j = 0; j < x.size(); ++j)
        z += weights_[j] * ((x[j] - standardizer_.mean[j]) / standardizer_.scale[j]);
    return z;
}

double LinearNeuron::predict_value(std::span<const double> x) const {
    const double z = pre_activation(x);
    return link_ == Link::Sigmoid ? sigmoid(z) : z;
}

int LinearNeuron::predict_class(std::span<const double> x) const {
    return sigmoid(pre_activation(x)) >= 0.5 ? 1 : 0;
}

nlohmann::json LinearNeuron::to_json() const {
    return {{"weights", weights_},
            {"bias", bias_},
            {"penalty", {{"kind", to_string(penalty_.kind)}, {"lambda", penalty_.lambda}}},
            {"link", link_ == Link::Sigmoid ? "sigmoid" : "identity"},
            {"standardizer", {{"mean", standardizer_.mean}, {"scale", standardizer_.scale}}},
            {"diagnostics",
             {{"iterations", diagnostics.iterations},
              {"gradient_norm", diagnostics.gradient_norm},
              {"converged", diagnostics.converged}}}};
}

LinearNeuron LinearNeuron::from_json(const nlohmann::json& doc) {
    Standardizer s{doc.at("standardizer").at("mean").get<std::vector<double>>(),
                   doc.at("standardizer").at("scale").get<std::vector<double>>()};
    Penalty p{parse_penalty_kind(doc.at("penalty").at("kind").get<std::string>()),
              doc.at("penalty").at("lambda").get<double>()};
    LinearNeuron out(doc.at("weights").get<std::vector<double>>(), doc.at("bias").get<double>(), p,
                     doc.at("link").get<std::string>() == "sigmoid" ? Link::Sigmoid : Link::Identity,
                     std::move(s));
    if (doc.contains("diagnostics")) {
        const auto& d = doc["diagnostics"];
        out.diagnostics.iterations = d.value("iterations", std::size_t{0});
        out.diagnostics.gradient_norm = d.value("gradient_norm", 0.0);
        out.diagnostics.converged = d.value("converged", false);
    }
    return out;
}

namespace {

FitDiagnostics lasso_coordinate_descent(const Matrix& xs, std::span<const double> y, double lambda,
                                        const OptimizerSettings& settings,
                                        std::vector<double>& w, double& b) {
    const std::size_t d = xs.cols();
    const std::size_t n = xs.rows();
    const auto nd = static_cast<double>(n);
    std::vector<double> col_sq(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) col_sq[j] += xs(r, j) * xs(r, j) / nd;
    std::vector<double> resid(y.begin(), y.end());
    for (std::size_t r = 0; r < n; ++r) resid[r] -= dot(xs.row(r), w) + b;
    const Penalty penalty{PenaltyKind::L1, lambda};

    FitDiagnostics diag;
    auto objective = [&] {
        double s = 0.0;
        for (double e : resid) s += e * e;
        return s / nd + penalty.value(w);
    };
    diag.loss_history.push_back(objective());
    for (diag.iterations = 0; diag.iterations < settings.max_iterations;) {
        double max_change = 0.0;
        // Unpenalised bias: exact minimiser given the weights.
        double shift = 0.0;
        for (double e : resid) shift += e;
        shift /= nd;
        b += shift;
        for (auto& e : resid) e -= shift;
        max_change = std::abs(shift);
        for (std::size_t j = 0; j < d; ++j) {
            if (col_sq[j] == 0.0) continue;
            double rho = 0.0;
            for (std::size_t r = 0; r < n; ++r) rho += xs(r, j) * (resid[r] + w[j] * xs(r, j));
            rho /= nd;
            const double half = lambda / 2.0;
            const double soft = rho > half ? rho - half : (rho < -half ? rho + half : 0.0);
            const double updated = soft / col_sq[j];
            const double delta = updated - w[j];
            if (delta != 0.0) {
                for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * xs(r, j);
                w[j] = updated;
            }
            max_change = std::max(max_change, std::abs(delta));
        }
        ++diag.iterations;
        diag.loss_history.push_back(objective());
        diag.gradient_norm = max_change;
        if (max_change < settings.tolerance) {
            diag.converged = true;
            break;
        }
    }
    return diag;
}

}  // namespace

LinearNeuron fit_penalized_linear(const Matrix& x, std::span<const double> y, const Penalty& penalty,
                                  const OptimizerSettings& settings, bool standardize) {
    check_inputs(x, y.size(), penalty, settings);
    for (double v : y)
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "non-finite target value");
    const Standardizer st = standardize ? Standardizer::fit(x) : Standardizer::identity(x.cols());
    const Matrix xs = standardize ? st.transform(x) : x;
    const std::size_t d = x.cols();

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    FitDiagnostics diag;
    if (penalty.kind == PenaltyKind::L1) {
        diag = lasso_coordinate_descent(xs, y, penalty.lambda, settings, w, b);
    } else {
        PackedObjective obj = [&](std::span<const double> p, std::vector<double>* g) {
            if (!g) return squared_objective(xs, y, p.first(d), p[d], penalty);
            std::vector<double> gw;
            double gb = 0.0;
            const double f = squared_objective(xs, y, p.first(d), p[d], penalty, &gw, &gb);
            std::copy(gw.begin(), gw.end(), g->begin());
            (*g)[d] = gb;
            return f;
        };
        std::vector<double> params(d + 1, 0.0);
        diag = descend(obj, obj, params, settings, 0.0, {});
        std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d), w.begin());
        b = params[d];
    }
    finish(diag, settings);
    LinearNeuron out(std::move(w), b, penalty, Link::Identity, st);
    out.diagnostics = std::move(diag);
    return out;
}

LinearNeuron fit_logistic(const Matrix& x, std::span<const int> y, const Penalty& penalty,
                          const OptimizerSettings& settings, bool standardize) {
    check_inputs(x, y.size(), penalty, settings);
    for (int v : y)
        if (v != 0 && v != 1) throw Error(ErrorKind::BadParams, "labels must be 0 or 1");
    const Standardizer st = standardize ? Standardizer::fit(x) : Standardizer::identity(x.cols());
    const Matrix xs = standardize ? st.transform(x) : x;
    const std::size_t d = x.cols();

    const Penalty smooth_penalty = penalty.kind == PenaltyKind::L1 ? Penalty{PenaltyKind::None, 0.0}
                                                                   : penalty;
    PackedObjective smooth = [&](std::span<const double> p, std::vector<double>* g) {
        if (!g) return logistic_objective(xs, y, p.first(d), p[d], smooth_penalty);
        std::vector<double> gw;
        double gb = 0.0;
        const double f = logistic_objective(xs, y, p.first(d), p[d], smooth_penalty, &gw, &gb);
        std::copy(gw.begin(), gw.end(), g->begin());
        (*g)[d] = gb;
        return f;
    };
    PackedObjective full = [&](std::span<const double> p, std::vector<double>*) {
        return logistic_objective(xs, y, p.first(d), p[d], penalty);
    };
    std::vector<double> params(d + 1, 0.0);
    const double l1 = penalty.kind == PenaltyKind::L1 ? penalty.lambda : 0.0;
    std::vector<bool> penalized(d + 1, true);
    penalized[d] = false;
    FitDiagnostics diag = descend(smooth, full, params, settings, l1, penalized);
    finish(diag, settings);
    std::vector<double> w(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
    LinearNeuron out(std::move(w), params[d], penalty, Link::Sigmoid, st);
    out.diagnostics = std::move(diag);
    return out;
}

}  // namespace gridstab::ml
