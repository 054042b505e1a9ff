#include "gridstab/spatial_load.hpp"

#include "gridstab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gridstab::load {

TimeProfile::TimeProfile() { hourly_.fill(1.0); }

TimeProfile::TimeProfile(const std::array<double, kHoursPerDay>& hourly) : hourly_(hourly) {
    double peak = 0.0;
    for (double v : hourly_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorKind::BadProfile, "time profile values must lie in [0, 1]");
        peak = std::max(peak, v);
    }
    if (peak != 1.0) throw Error(ErrorKind::BadProfile, "time profile must peak at exactly 1");
}

double TimeProfile::operator()(double t) const noexcept {
    constexpr double day = static_cast<double>(kHoursPerDay);
    double u = std::fmod(t, day);
    if (u < 0.0) u += day;
    const auto h0 = std::min(static_cast<std::size_t>(u), kHoursPerDay - 1);
    const double w = u - static_cast<double>(h0);
    const double a = hourly_[h0];
    const double b = hourly_[(h0 + 1) % kHoursPerDay];
    return a + w * (b - a);
}

double LoadComponent::density(double r, double t) const noexcept {
    const double d = r - peak_radius;
    return peak_density * std::exp(-width * d * d) * beta(t);
}

void LoadComponent::validate() const {
    if (!(peak_density >= 0.0)) throw Error(ErrorKind::BadProfile, "peak density P must be >= 0");
    if (!(width > 0.0)) throw Error(ErrorKind::BadProfile, "width a must be > 0");
    if (!(peak_radius >= 0.0)) throw Error(ErrorKind::BadProfile, "peak radius r_m must be >= 0");
}

LoadProfile::LoadProfile(std::vector<LoadComponent> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw Error(ErrorKind::BadProfile, "a load profile needs a component");
    for (const auto& c : components_) c.validate();
}

LoadProfile LoadProfile::scaled(double factor) const {
    auto comps = components_;
    for (auto& c : comps) c.peak_density *= factor;
    return LoadProfile(std::move(comps));
}

double cartesian_to_radial(double x, double y) noexcept { return std::hypot(x, y); }

double density_at(const LoadProfile& profile, double r, double t) {
    if (!(r >= 0.0)) throw Error(ErrorKind::BadRange, "radius must be >= 0");
    double q = 0.0;
    for (const auto& c : profile.components()) q += c.density(r, t);
    return q;
}

double density_at_xy(const LoadProfile& profile, double x, double y, double t) {
    return density_at(profile, cartesian_to_radial(x, y), t);
}

namespace {

struct Node {
    double x;
    double w;
};

// Composite Simpson abscissae and weights; appends to `out`.
void simpson_nodes(double a, double b, int steps, std::vector<Node>& out) {
    if (steps % 2) ++steps;
    const double h = (b - a) / steps;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double x = i == steps ? b : a + i * h;
        out.push_back({x, w * h / 3.0});
    }
}

void check_resolution(int steps) {
    if (steps < 2) throw Error(ErrorKind::BadResolution, "resolution must be >= 2");
}

}  // namespace

double simpson(const std::function<double(double)>& f, double a, double b, int steps) {
    check_resolution(steps);
    std::vector<Node> nodes;
    simpson_nodes(a, b, steps, nodes);
    double sum = 0.0;
    for (const auto& n : nodes) sum += n.w * f(n.x);
    return sum;
}

double radial_gaussian_integral(double width, double peak_radius, Interval r, int steps) {
    if (!(r.hi > r.lo)) throw Error(ErrorKind::BadRange, "need r1 > r0");
    if (!(width > 0.0)) throw Error(ErrorKind::BadProfile, "width a must be > 0");
    return simpson(
        [&](double x) {
            const double d = x - peak_radius;
            return std::exp(-width * d * d);
        },
        r.lo, r.hi, steps);
}

double total_load(const LoadProfile& profile, Interval r, Interval t, int resolution) {
    if (!(r.lo >= 0.0) || !(r.hi > r.lo))
        throw Error(ErrorKind::BadRange, "radial range must satisfy 0 <= r0 < r1");
    if (!(t.hi > t.lo)) throw Error(ErrorKind::BadRange, "time range must satisfy t0 < t1");
    check_resolution(resolution);

    std::vector<Node> radial;
    simpson_nodes(r.lo, r.hi, resolution, radial);

    // Panels between whole hours; each gets its share of the steps (at least 2).
    std::vector<double> cuts{t.lo};
    for (double hour = std::floor(t.lo) + 1.0; hour < t.hi; hour += 1.0) cuts.push_back(hour);
    cuts.push_back(t.hi);
    std::vector<Node> temporal;
    const double span = t.hi - t.lo;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        const int steps = std::max(2, static_cast<int>(std::lround(resolution * len / span)));
        simpson_nodes(cuts[i], cuts[i + 1], steps, temporal);
    }

    double total = 0.0;
    for (const auto& tn : temporal) {
        double inner = 0.0;
        for (const auto& rn : radial)
            inner += rn.w * density_at(profile, rn.x, tn.x) * 2.0 * std::numbers::pi * rn.x;
        total += tn.w * inner;
    }
    return total;
}

LoadProfile profile_from_json(const nlohmann::json& doc) {
    if (!doc.contains("components") || !doc["components"].is_array())
        throw Error(ErrorKind::BadProfile, "load profile JSON needs a components array");
    std::vector<LoadComponent> comps;
    for (const auto& c : doc["components"]) {
        LoadComponent comp;
        try {
            comp.energy_type = c.value("type", std::string("unspecified"));
            comp.peak_density = c.at("P").get<double>();
            comp.width = c.at("a").get<double>();
            comp.peak_radius = c.at("r_m").get<double>();
            if (c.contains("beta")) {
                const auto beta = c.at("beta").get<std::vector<double>>();
                if (beta.size() != kHoursPerDay)
                    throw Error(ErrorKind::BadProfile, "beta must have 24 hourly values");
                std::array<double, kHoursPerDay> hourly{};
                std::copy(beta.begin(), beta.end(), hourly.begin());
                comp.beta = TimeProfile(hourly);
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::BadProfile, std::string("load component: ") + e.what());
        }
        comps.push_back(std::move(comp));
    }
    return LoadProfile(std::move(comps));
}

nlohmann::json to_json(const LoadProfile& profile) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : profile.components()) {
        comps.push_back({{"type", c.energy_type},
                         {"P", c.peak_density},
                         {"a", c.width},
                         {"r_m", c.peak_radius},
                         {"beta", c.beta.hourly()}});
    }
    return {{"components", comps}};
}

}  // namespace gridstab::load
