#include "gridstab/synth.hpp"

#include "gridstab/error.hpp"
#include "gridstab/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

namespace gridstab::synth {

void SimSettings::validate_for(const StarGridParams& params) const {
    const auto [tmin, tmax] = std::minmax_element(params.tau.begin(), params.tau.end());
    auto bad = [](const std::string& what) { throw Error(ErrorKind::BadSettings, what); };
    if (!(step > 0.0)) bad("step must be positive");
    if (!(horizon >= 10.0 * *tmax))
        bad("horizon " + format_double(horizon) + " s is shorter than 10 x max(tau) = " +
            format_double(10.0 * *tmax) + " s");
    if (!(step <= *tmin / 10.0))
        bad("step " + format_double(step) + " s exceeds min(tau)/10 = " + format_double(*tmin / 10.0));
    if (!(damping >= 0.0) || !(coupling > 0.0)) bad("damping must be >= 0 and coupling > 0");
    if (!(fit_window > 0.0 && fit_window <= 1.0)) bad("fit window must lie in (0, 1]");
    if (!(divergence_guard > std::abs(initial_perturbation)) || initial_perturbation == 0.0)
        bad("need 0 < |initial perturbation| < divergence guard");
    if (!(averaging_window >= 0.0) || !std::isfinite(averaging_window))
        bad("averaging window must be finite and >= 0");
    for (std::size_t i = 1; i < kNodeCount; ++i) {
        if (std::abs(params.p[i]) > coupling)
            bad("coupling too weak for a phase-locked start (|p| > K)");
    }
}

StarGridParams sample_row(std::uint64_t seed, std::size_t row) {
    std::mt19937_64 rng(derive_seed(seed, seed_stream::synth_row, row));
    std::uniform_real_distribution<double> tau(kTauMin, kTauMax);
    std::uniform_real_distribution<double> power(kConsumerPowerMin, kConsumerPowerMax);
    std::uniform_real_distribution<double> gamma(kGammaMin, kGammaMax);
    StarGridParams out;
    for (auto& t : out.tau) t = tau(rng);
    for (std::size_t i = 1; i < kNodeCount; ++i) out.p[i] = power(rng);
    out.p[0] = -(out.p[1] + out.p[2] + out.p[3]);
    for (auto& g : out.g) g = gamma(rng);
    return out;
}

std::vector<StarGridParams> sample_params(std::uint64_t seed, std::size_t count) {
    std::vector<StarGridParams> out;
    out.reserve(count);
    for (std::size_t row = 0; row < count; ++row) out.push_back(sample_row(seed, row));
    return out;
}

StarGridParams canonical(const StarGridParams& params) {
    std::array<std::tuple<double, double, double>, 3> consumers;
    for (std::size_t i = 1; i < kNodeCount; ++i)
        consumers[i - 1] = {params.tau[i], params.p[i], params.g[i]};
    std::sort(consumers.begin(), consumers.end());
    StarGridParams out = params;
    for (std::size_t i = 1; i < kNodeCount; ++i)
        std::tie(out.tau[i], out.p[i], out.g[i]) = consumers[i - 1];
    return out;
}

namespace {

using State = std::array<double, kNodeCount>;

// Fixed-step RK4 for the delayed star model. omega history is stored at every
// grid point; delayed values between grid points are linearly interpolated and
// the pre-history (t <= 0) is the initial state.
class StarIntegrator {
public:
    StarIntegrator(const StarGridParams& params, const SimSettings& s)
        : prm_(params), s_(s), steps_(static_cast<std::size_t>(std::llround(s.horizon / s.step))) {
        history_.reserve(steps_ + 1);
        theta_history_.reserve(steps_ + 1);
        window_steps_ = s.averaging_window / s.step;
        for (std::size_t i = 0; i < kNodeCount; ++i) delay_steps_[i] = prm_.tau[i] / s_.step;
    }

    std::size_t steps() const noexcept { return steps_; }

    // Fills log_peak[k] = log(max_i |omega_i(t_k)|) for k = 0..last and
    // returns last; stops early when the divergence guard trips.
    std::size_t run(std::vector<double>& log_peak, bool& diverged) {
        State theta{};
        for (std::size_t i = 1; i < kNodeCount; ++i) theta[i] = std::asin(prm_.p[i] / s_.coupling);
        State omega;
        omega.fill(s_.initial_perturbation);
        history_.push_back(omega);
        theta_history_.push_back(theta);
        log_peak.assign(1, log_peak_of(omega));
        diverged = false;

        const double h = s_.step;
        for (std::size_t k = 0; k < steps_; ++k) {
            State k1t, k1w, k2t, k2w, k3t, k3w, k4t, k4w, th, om;
            derivative(k, 0.0, theta, omega, k1t, k1w);
            for (std::size_t i = 0; i < kNodeCount; ++i) {
                th[i] = theta[i] + 0.5 * h * k1t[i];
                om[i] = omega[i] + 0.5 * h * k1w[i];
            }
            derivative(k, 0.5, th, om, k2t, k2w);
            for (std::size_t i = 0; i < kNodeCount; ++i) {
                th[i] = theta[i] + 0.5 * h * k2t[i];
                om[i] = omega[i] + 0.5 * h * k2w[i];
            }
            derivative(k, 0.5, th, om, k3t, k3w);
            for (std::size_t i = 0; i < kNodeCount; ++i) {
                th[i] = theta[i] + h * k3t[i];
                om[i] = omega[i] + h * k3w[i];
            }
            derivative(k, 1.0, th, om, k4t, k4w);
            for (std::size_t i = 0; i < kNodeCount; ++i) {
                theta[i] += h / 6.0 * (k1t[i] + 2.0 * k2t[i] + 2.0 * k3t[i] + k4t[i]);
                omega[i] += h / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
            }
            history_.push_back(omega);
            theta_history_.push_back(theta);
            const double peak = peak_of(omega);
            if (!std::isfinite(peak) || peak > s_.divergence_guard) {
                diverged = true;
                log_peak.push_back(std::isfinite(peak) ? std::log(peak)
                                                       : std::log(s_.divergence_guard));
                return k + 1;
            }
            log_peak.push_back(std::log(std::max(peak, 1e-300)));
        }
        return steps_;
    }

private:
    static double peak_of(const State& w) {
        double m = 0.0;
        for (double v : w) m = std::max(m, std::abs(v));
        return m;
    }
    static double log_peak_of(const State& w) { return std::log(std::max(peak_of(w), 1e-300)); }

    double delayed_omega(std::size_t node, std::size_t k, double frac) const {
        const double pos = static_cast<double>(k) + frac - delay_steps_[node];
        if (pos <= 0.0) return history_.front()[node];
        const auto i0 = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(i0);
        const double a = history_[i0][node];
        if (w == 0.0) return a;
        return a + w * (history_[i0 + 1][node] - a);
    }

    // theta at grid position pos (in steps); the pre-history drifts at the
    // initial frequency so its window average equals omega(0).
    double theta_at(std::size_t node, double pos) const {
        if (pos <= 0.0) return theta_history_.front()[node] + pos * s_.step * history_.front()[node];
        const auto i0 = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(i0);
        const double a = theta_history_[i0][node];
        if (w == 0.0) return a;
        return a + w * (theta_history_[i0 + 1][node] - a);
    }

    // Delayed frequency fed back by node i: omega(t - tau) or, with an
    // averaging window W, the mean of omega over [t - tau - W, t - tau].
    double feedback(std::size_t node, std::size_t k, double frac) const {
        if (window_steps_ == 0.0) return delayed_omega(node, k, frac);
        const double end = static_cast<double>(k) + frac - delay_steps_[node];
        return (theta_at(node, end) - theta_at(node, end - window_steps_)) / s_.averaging_window;
    }

    void derivative(std::size_t k, double frac, const State& theta, const State& omega, State& dtheta,
                    State& domega) const {
        const double K = s_.coupling;
        double supplier_coupling = 0.0;
        for (std::size_t j = 1; j < kNodeCount; ++j) {
            const double flow = std::sin(theta[j] - theta[0]);
            supplier_coupling += flow;
            domega[j] = -K * flow;
        }
        domega[0] = K * supplier_coupling;
        for (std::size_t i = 0; i < kNodeCount; ++i) {
            dtheta[i] = omega[i];
            domega[i] += prm_.p[i] - s_.damping * omega[i] - prm_.g[i] * feedback(i, k, frac);
        }
    }

    StarGridParams prm_;
    SimSettings s_;
    std::size_t steps_;
    std::array<double, kNodeCount> delay_steps_{};
    double window_steps_ = 0.0;
    std::vector<State> history_;
    std::vector<State> theta_history_;
};

double trailing_slope(const std::vector<double>& y, std::size_t last, double h, double window) {
    const auto first = static_cast<std::size_t>(
        std::floor(static_cast<double>(last) * (1.0 - window)));
    const std::size_t count = last - first + 1;
    if (count < 2) return 0.0;
    double xm = 0.0, ym = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        xm += static_cast<double>(k) * h;
        ym += y[k];
    }
    xm /= static_cast<double>(count);
    ym /= static_cast<double>(count);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
        const double dx = static_cast<double>(k) * h - xm;
        sxy += dx * (y[k] - ym);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace

double stability_index(const StarGridParams& params, const SimSettings& settings, bool* diverged,
                       double* integrated_time) {
    settings.validate_for(params);
    StarIntegrator integrator(canonical(params), settings);
    std::vector<double> log_peak;
    bool blew_up = false;
    const std::size_t last = integrator.run(log_peak, blew_up);
    double index = trailing_slope(log_peak, last, settings.step, settings.fit_window);
    // A guard trip means sustained growth even if the fitted tail is flat.
    if (blew_up && !(index > 0.0)) {
        const double t = static_cast<double>(last) * settings.step;
        index = std::log(settings.divergence_guard / std::abs(settings.initial_perturbation)) / t;
    }
    if (diverged) *diverged = blew_up;
    if (integrated_time) *integrated_time = static_cast<double>(last) * settings.step;
    return index;
}

StabilityResult label_stability(const StarGridParams& params, const SimSettings& settings,
                                const LabelConvention& convention) {
    StabilityResult r;
    r.index = stability_index(params, settings, &r.diverged, &r.integrated_time);
    r.label = convention.label_for(r.index);
    r.marginal = std::abs(r.index) < kMarginalIndex;
    return r;
}

SynthResult generate_dataset(std::uint64_t seed, std::size_t count, const SimSettings& settings,
                             const LabelConvention& convention) {
    if (count == 0) throw Error(ErrorKind::BadParams, "count must be at least 1");
    std::vector<GridSample> rows(count);
    std::vector<StabilityResult> results(count);
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        const StarGridParams prm = sample_row(seed, row);
        results[row] = label_stability(prm, settings, convention);
        GridSample& s = rows[row];
        s.tau = prm.tau;
        s.p = prm.p;
        s.g = prm.g;
        s.stab = results[row].index;
        s.label = results[row].label;
    }
    SynthResult out;
    for (std::size_t row = 0; row < count; ++row) {
        if (results[row].marginal) out.marginal_rows.push_back(row);
        if (results[row].diverged) out.diverged_rows.push_back(row);
    }
    out.dataset = Dataset(std::move(rows), "synthetic:seed=" + std::to_string(seed));
    out.seed = seed;
    out.settings = settings;
    out.convention = convention;
    return out;
}

nlohmann::json to_json(const SimSettings& s) {
    return {{"damping", s.damping},
            {"coupling", s.coupling},
            {"step", s.step},
            {"horizon", s.horizon},
            {"initial_perturbation", s.initial_perturbation},
            {"fit_window", s.fit_window},
            {"divergence_guard", s.divergence_guard},
            {"averaging_window", s.averaging_window}};
}

SimSettings sim_settings_from_json(const nlohmann::json& doc) {
    SimSettings s;
    s.damping = doc.value("damping", s.damping);
    s.coupling = doc.value("coupling", s.coupling);
    s.step = doc.value("step", s.step);
    s.horizon = doc.value("horizon", s.horizon);
    s.initial_perturbation = doc.value("initial_perturbation", s.initial_perturbation);
    s.fit_window = doc.value("fit_window", s.fit_window);
    s.divergence_guard = doc.value("divergence_guard", s.divergence_guard);
    s.averaging_window = doc.value("averaging_window", s.averaging_window);
    return s;
}

nlohmann::json SynthResult::sidecar() const {
    return {{"schema_version", kSchemaVersion},
            {"seed", seed},
            {"count", dataset.size()},
            {"label_convention", convention.name()},
            {"stab_column", "raw fitted exponential rate of max_i |omega_i|, 1/s"},
            {"sim_settings", to_json(settings)},
            {"marginal_threshold", kMarginalIndex},
            {"marginal_rows", marginal_rows},
            {"diverged_rows", diverged_rows}};
}

}  // namespace gridstab::synth
