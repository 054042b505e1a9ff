#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace gridstab::load {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr int kDefaultResolution = 512;

/// Daily load shape: 24 hourly breakpoints, linear between them and periodic
/// over 24 h. Values lie in [0, 1] with a peak of exactly 1.
class TimeProfile {
public:
    TimeProfile();  // flat profile, beta(t) = 1
    explicit TimeProfile(const std::array<double, kHoursPerDay>& hourly);

    /// t in hours; any real t is wrapped into [0, 24).
    double operator()(double t) const noexcept;
    const std::array<double, kHoursPerDay>& hourly() const noexcept { return hourly_; }

private:
    std::array<double, kHoursPerDay> hourly_;
};

struct LoadComponent {
    std::string energy_type;
    double peak_density = 0.0;  // P, power per unit area
    double width = 1.0;         // a, 1/length^2
    double peak_radius = 0.0;   // r_m, length
    TimeProfile beta;

    /// P * exp(-a (r - r_m)^2) * beta(t)
    double density(double r, double t) const noexcept;
    void validate() const;
};

class LoadProfile {
public:
    explicit LoadProfile(std::vector<LoadComponent> components);

    const std::vector<LoadComponent>& components() const noexcept { return components_; }
    LoadProfile scaled(double factor) const;

private:
    std::vector<LoadComponent> components_;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

double cartesian_to_radial(double x, double y) noexcept;

/// Q'(r, t): sum over components of P_n exp(-a_n (r - r_m,n)^2) beta_n(t).
double density_at(const LoadProfile& profile, double r, double t);
double density_at_xy(const LoadProfile& profile, double x, double y, double t);

/// Composite Simpson over [a, b]; an odd step count is rounded up to even.
double simpson(const std::function<double(double)>& f, double a, double b, int steps);

/// Integral of exp(-a (r - r_m)^2) dr over [r0, r1], no area weight.
double radial_gaussian_integral(double width, double peak_radius, Interval r, int steps);

/// Total energy: the double integral of Q'(r, t) 2 pi r dr dt over the
/// annulus r in [r0, r1] and the time window [t0, t1] (hours). Simpson in
/// both axes; the time axis is cut at whole hours so each panel sees a
/// linear beta.
double total_load(const LoadProfile& profile, Interval r, Interval t,
                  int resolution = kDefaultResolution);

LoadProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const LoadProfile& profile);

}  // namespace gridstab::load
