#pragma once

#include "gridstab/core_data.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace gridstab::synth {

/// Parameters of the four-node star: index 0 is the supplier, 1..3 consumers.
struct StarGridParams {
    std::array<double, kNodeCount> tau{};
    std::array<double, kNodeCount> p{};
    std::array<double, kNodeCount> g{};

    friend bool operator==(const StarGridParams&, const StarGridParams&) = default;
};

/// Integration and index-estimation settings for the delayed swing model
///
///   dtheta_i/dt = omega_i
///   domega_i/dt = p_i - damping*omega_i - g_i*omega_i(t - tau_i)
///                 + coupling * sum_{j adj i} sin(theta_j - theta_i)
///
/// started from the phase-locked state with every omega_i = initial_perturbation.
/// With averaging_window W > 0 the delayed term uses the mean of omega_i over
/// [t - tau_i - W, t - tau_i] instead of the point value.
struct SimSettings {
    double damping = 0.1;
    double coupling = 8.0;
    double step = 0.01;              // seconds
    double horizon = 100.0;          // seconds
    double initial_perturbation = 0.1;
    double fit_window = 0.5;         // trailing fraction of the integrated span
    double divergence_guard = 10.0;  // max |omega| before integration stops
    double averaging_window = 2.0;   // seconds; 0 feeds back omega(t - tau) itself

    /// Throws BadSettings when h <= 0, T < 10 max(tau) or h > min(tau)/10.
    void validate_for(const StarGridParams& params) const;
};

inline constexpr double kMarginalIndex = 1e-4;

struct StabilityResult {
    double index = 0.0;  // fitted exponential rate, 1/s; negative means decay
    Label label = Label::Unstable;
    bool marginal = false;  // |index| < kMarginalIndex
    bool diverged = false;  // divergence guard tripped before the horizon
    double integrated_time = 0.0;
};

/// Deterministic draw for one row, seeded from (seed, row).
StarGridParams sample_row(std::uint64_t seed, std::size_t row);
std::vector<StarGridParams> sample_params(std::uint64_t seed, std::size_t count);

/// Consumers sorted by (tau, p, g). The index depends only on this form, so
/// relabelling consumer nodes leaves it bit-identical.
StarGridParams canonical(const StarGridParams& params);

double stability_index(const StarGridParams& params, const SimSettings& settings,
                       bool* diverged = nullptr, double* integrated_time = nullptr);

StabilityResult label_stability(const StarGridParams& params, const SimSettings& settings,
                                const LabelConvention& convention = LabelConvention::paper());

struct SynthResult {
    Dataset dataset;
    std::vector<std::size_t> marginal_rows;  // 0-based
    std::vector<std::size_t> diverged_rows;
    std::uint64_t seed = 0;
    SimSettings settings;
    LabelConvention convention;

    /// Sidecar document: settings, seed, convention, marginal/diverged rows.
    nlohmann::json sidecar() const;
};

SynthResult generate_dataset(std::uint64_t seed, std::size_t count, const SimSettings& settings,
                             const LabelConvention& convention = LabelConvention::paper());

nlohmann::json to_json(const SimSettings& settings);
SimSettings sim_settings_from_json(const nlohmann::json& doc);

}  // namespace gridstab::synth
