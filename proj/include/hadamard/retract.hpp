#pragma once

#include "hadamard/sets.hpp"

#include <random>

namespace hadamard {

/// P(x): x on G, pi(x) off G. Throws NonUniqueProjection where G fails to be weakly convex.
inline Point retraction_P(const SetSampler& sampler, const Point& x) {
    if (sampler.contains(x)) return x;
    return project(sampler, x);
}

inline Point retraction_P(const MetricModel& model, const ClosedSetSpec& set, const Point& x, const SearchSpec& search) {
    return retraction_P(SetSampler(model, set, search), x);
}

namespace detail {

inline void require_unit_interval(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw RangeError("homotopy parameter must lie in [0, 1]");
}

// Point at fraction t of the geodesic x -> foot, given log_x(foot).
inline Point along(const MetricModel& model, const Point& x, const Vec& v, double t) {
    if (t == 0.0) return x;
    return exp_ivp(model, TangentVector{x, v}, t).base;
}

}  // namespace detail

/// H(x, t) = (1 - t) x + t pi(x) along the geodesic [x, pi(x)]; identity on G.
inline Point homotopy_H(const SetSampler& sampler, const Point& x, double t) {
    detail::require_unit_interval(t);
    if (sampler.contains(x)) return x;
    if (t == 0.0) return x;
    const Point foot = project(sampler, x);
    if (t == 1.0) return foot;
    return detail::along(sampler.model(), x, log_map(sampler.model(), x, foot), t);
}

inline Point homotopy_H(const MetricModel& model, const ClosedSetSpec& set, const Point& x, double t,
                        const SearchSpec& search) {
    return homotopy_H(SetSampler(model, set, search), x, t);
}

struct ContinuityReport {
    Point base;
    double epsilon = 0.0;
    std::size_t samples = 0;
    double max_displacement = 0.0;  // max d(P(y), P(x)) over sampled y in B(x, eps)
    Point worst_sample;
    double bound() const { return 2.0 * epsilon; }
    bool within_bound(double slack = 1e-5) const { return max_displacement < bound() + slack; }
};

/// Samples y in the open geodesic ball B(x, eps) around a boundary point x and measures
/// d(P(y), P(x)); the continuity argument bounds it by d(pi(y), y) + d(y, x) < 2 eps.
inline ContinuityReport continuity_probe(const SetSampler& sampler, const Point& x, double eps, std::size_t count,
                                         std::uint64_t seed) {
    if (!(eps > 0.0)) throw RangeError("continuity probe radius must be positive");
    const MetricModel& model = sampler.model();
    if (std::abs(sampler.oracle().defect(x.coords)) > kBoundaryTolerance)
        throw RangeError("continuity probe must start on the boundary of the set");
    const Point px = retraction_P(sampler, x);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ContinuityReport rep{x, eps, 0, 0.0, x};
    const int n = model.dim();
    while (rep.samples < count) {
        Vec dir(n);
        for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
        if (dir.norm() < 1e-12) continue;
        const double r = eps * unif(rng);
        const UnitTangent u = UnitTangent::from(model, x, dir);
        const Point y = exp_ivp(model, TangentVector{x, r * u.components()}, 1.0).base;
        if (!model.in_domain(y.coords)) continue;
        const double d = distance(model, retraction_P(sampler, y), px);
        if (d > rep.max_displacement) {
            rep.max_displacement = d;
            rep.worst_sample = y;
        }
        ++rep.samples;
    }
    return rep;
}

struct TraceSample {
    double t = 0.0;
    Point point;
};

struct HomotopyTrace {
    Point start;
    std::vector<TraceSample> samples;
    Point endpoint;
};

/// H(x, i / (steps - 1)) for i = 0 .. steps - 1.
inline HomotopyTrace retract_trace(const SetSampler& sampler, const Point& x, int steps) {
    if (steps < 2) throw RangeError("a trace needs at least two steps");
    HomotopyTrace trace{x, {}, x};
    const bool member = sampler.contains(x);
    const Point foot = member ? x : project(sampler, x);
    const Vec v = member ? Vec::Zero(x.dim()) : log_map(sampler.model(), x, foot);
    for (int i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / (steps - 1);
        Point p = member ? x : (i == steps - 1 ? foot : detail::along(sampler.model(), x, v, t));
        trace.samples.push_back({t, std::move(p)});
    }
    trace.endpoint = foot;
    return trace;
}

}  // namespace hadamard
