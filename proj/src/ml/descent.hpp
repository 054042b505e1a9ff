#pragma once

#include "gridstab/error.hpp"
#include "gridstab/ml/linear.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace gridstab::ml::detail {

// Objective over a packed parameter vector; fills the gradient when given one.
using PackedObjective = std::function<double(std::span<const double>, std::vector<double>*)>;

inline double norm2(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Full-batch gradient descent with backtracking: each iteration tries the
// configured learning rate and halves it until the objective does not
// increase; when kMaxHalvings halvings still find no such step the objective
// is flat at machine precision and descent stops. With l1 > 0 the step is proximal (soft-thresholding) on the
// entries flagged in `penalized`; `smooth` supplies the gradient and `full`
// scores candidates.
// Neumaier-compensated running sum; keeps objective values accurate enough
// for backtracking to see sub-ulp-scale decreases near the optimum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline constexpr int kMaxHalvings = 40;

inline FitDiagnostics descend(const PackedObjective& smooth, const PackedObjective& full,
                              std::vector<double>& params, const OptimizerSettings& settings,
                              double l1, const std::vector<bool>& penalized) {
    FitDiagnostics diag;
    std::vector<double> grad(params.size()), candidate(params.size()), mapping(params.size());
    double f = full(params, nullptr);
    if (!std::isfinite(f)) throw Error(ErrorKind::NonFiniteLoss, "initial loss is not finite");
    diag.loss_history.push_back(f);
    for (diag.iterations = 0; diag.iterations < settings.max_iterations; ++diag.iterations) {
        smooth(params, &grad);
        for (double g : grad)
            if (!std::isfinite(g)) throw Error(ErrorKind::NonFiniteLoss, "gradient is not finite");
        if (l1 == 0.0) {
            diag.gradient_norm = norm2(grad);
            if (diag.gradient_norm < settings.tolerance) {
                diag.converged = true;
                return diag;
            }
        }
        double step = settings.learning_rate;
        bool accepted = false;
        for (int halving = 0; halving <= kMaxHalvings; ++halving, step /= 2.0) {
            for (std::size_t i = 0; i < params.size(); ++i) candidate[i] = params[i] - step * grad[i];
            if (l1 > 0.0) {
                const double t = step * l1;
                for (std::size_t j = 0; j < params.size(); ++j) {
                    if (!penalized[j]) continue;
                    const double v = candidate[j];
                    candidate[j] = v > t ? v - t : (v < -t ? v + t : 0.0);
                }
            }
            const double fc = full(candidate, nullptr);
            if (!std::isfinite(fc)) continue;
            if (fc <= f) {
                if (l1 > 0.0) {
                    for (std::size_t i = 0; i < params.size(); ++i)
                        mapping[i] = (params[i] - candidate[i]) / step;
                    diag.gradient_norm = norm2(mapping);
                }
                params.swap(candidate);
                f = fc;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No step decreases the objective at machine precision.
            return diag;
        }
        diag.loss_history.push_back(f);
        if (l1 > 0.0 && diag.gradient_norm < settings.tolerance) {
            diag.converged = true;
            ++diag.iterations;
            return diag;
        }
    }
    return diag;
}

inline void finish(const FitDiagnostics& diag, const OptimizerSettings& settings) {
    if (!diag.converged && settings.require_convergence)
        throw NoConvergenceError(diag.gradient_norm, diag.iterations);
}

}  // namespace gridstab::ml::detail
