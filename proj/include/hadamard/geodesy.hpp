#pragma once

#include "hadamard/metric.hpp"
#include "hadamard/model_space.hpp"

#include <optional>
#include <vector>

namespace hadamard {

/// A tangent vector of riemannian norm 1.
class UnitTangent {
public:
    /// Normalises `direction` at `base`; throws DegenerateError for a zero direction.
    static UnitTangent from(const MetricModel& model, const Point& base, const Vec& direction) {
        model.require_domain(base);
        if (direction.size() != model.dim()) throw DimensionError("direction has the wrong dimension");
        const double len = model.scale(base.coords) * direction.norm();
        if (!(len > 0.0) || !std::isfinite(len)) throw DegenerateError("cannot normalise a zero direction");
        return UnitTangent(TangentVector{base, direction / len});
    }

    const TangentVector& vector() const { return v_; }
    const Point& base() const { return v_.base; }
    const Vec& components() const { return v_.components; }
    UnitTangent reversed() const { return UnitTangent(TangentVector{v_.base, -v_.components}); }

private:
    explicit UnitTangent(TangentVector v) : v_(std::move(v)) {}
    TangentVector v_;
};

struct GeodesicSample {
    double t = 0.0;
    Point point;
    Vec velocity;
};

/// Sampled geodesic; time runs over [0, 1] for boundary-value solutions, so length equals speed.
struct GeodesicPath {
    std::vector<GeodesicSample> samples;
    double length = 0.0;

    const Vec& initial_velocity() const { return samples.front().velocity; }
};

namespace detail {

using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

inline State geodesic_rhs(const MetricModel& model, const State& s) {
    const int n = model.dim();
    const Vec x = s.head(n);
    const Vec v = s.tail(n);
    const Vec g = model.grad_phi(x);
    State out(2 * n);
    out.head(n) = v;
    // x'' = -Gamma(v, v) for the conformal Christoffels.
    out.tail(n) = -2.0 * g.dot(v) * v + v.squaredNorm() * g;
    return out;
}

inline bool state_ok(const MetricModel& model, const State& s) {
    return s.allFinite() && model.in_domain(s.head(model.dim()));
}

}  // namespace detail

struct IntegrationOptions {
    double tolerance = 1e-10;  // local error per step, in metric units, relative to max(1, speed)
    std::size_t max_steps = 2'000'000;
};

/// Integrates the geodesic equation from v for time t >= 0 with an adaptive Dormand-Prince
/// 5(4) pair. Errors are measured in the riemannian norm so accuracy is uniform near the
/// ideal boundary of the hyperbolic charts. Accepted steps are appended to `samples`.
inline std::pair<Vec, Vec> integrate_geodesic(const MetricModel& model, const TangentVector& v, double t,
                                              const IntegrationOptions& opts = {},
                                              std::vector<GeodesicSample>* samples = nullptr) {
    using detail::State;
    model.require_domain(v.base);
    if (v.components.size() != model.dim()) throw DimensionError("tangent vector has the wrong dimension");
    if (!std::isfinite(t)) throw RangeError("integration time must be finite");
    const int n = model.dim();
    if (t < 0.0) {
        std::vector<GeodesicSample> local;
        auto [x, w] = integrate_geodesic(model, TangentVector{v.base, -v.components}, -t, opts,
                                         samples ? &local : nullptr);
        if (samples)
            for (auto& s : local) samples->push_back({-s.t, s.point, -s.velocity});
        return {x, -w};
    }

    State y(2 * n);
    y.head(n) = v.base.coords;
    y.tail(n) = v.components;
    if (samples) samples->push_back({0.0, v.base, v.components});
    if (t == 0.0) return {v.base.coords, v.components};

    const double speed = model.scale(v.base.coords) * v.components.norm();
    if (speed == 0.0) {
        if (samples) samples->push_back({t, v.base, v.components});
        return {v.base.coords, v.components};
    }
    const double tol = opts.tolerance * std::max(1.0, speed);

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2, (void)c3, (void)c4, (void)c5;

    double now = 0.0;
    double h = std::min(t, 0.05 / std::max(1.0, speed));
    State k1 = detail::geodesic_rhs(model, y);
    std::size_t steps = 0;
    while (now < t) {
        if (++steps > opts.max_steps) throw NonConvergence("geodesic integration exceeded the step budget", t - now);
        const bool last = now + h >= t;
        if (last) h = t - now;
        bool ok = true;
        auto stage = [&](const State& s) -> State {
            if (!ok || !detail::state_ok(model, s)) {
                ok = false;
                return State::Zero(2 * n);
            }
            return detail::geodesic_rhs(model, s);
        };
        const State k2 = stage(y + h * a21 * k1);
        const State k3 = stage(y + h * (a31 * k1 + a32 * k2));
        const State k4 = stage(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const State k5 = stage(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State k6 = stage(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const State next = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const State k7 = stage(next);
        double factor = 0.25;
        if (ok) {
            const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double sc = model.scale(next.head(n));
            // Near the ideal boundary the metric magnifies chart roundoff, so the tolerance
            // never asks for more than a few ulps in chart coordinates.
            constexpr double ulp = 64.0 * std::numeric_limits<double>::epsilon();
            const double tol_x = std::max(tol, sc * ulp * (1.0 + next.head(n).norm()));
            const double tol_v = std::max(tol, sc * ulp * next.tail(n).norm());
            const double e = sc * std::max(err.head(n).norm() / tol_x, err.tail(n).norm() / tol_v);
            if (e <= 1.0) {
                now = last ? t : now + h;
                y = next;
                k1 = k7;
                if (samples) samples->push_back({now, Point(Vec(y.head(n))), Vec(y.tail(n))});
            }
            factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
        }
        // Within a micro-step of the chart edge roundoff stalls progress; call it an exit.
        if (!ok && h < 1e-6) throw ChartExit("geodesic left the chart domain", now);
        h *= factor;
        if (h < 1e-13 * std::max(1.0, t)) {
            if (!ok) throw ChartExit("geodesic left the chart domain", now);
            throw NonConvergence("geodesic integration step underflow", t - now);
        }
    }
    return {Vec(y.head(n)), Vec(y.tail(n))};
}

/// gamma(t), gamma'(t) for the geodesic with initial velocity v.
inline TangentVector exp_ivp(const MetricModel& model, const TangentVector& v, double t, double tolerance = 1e-10) {
    auto [x, w] = integrate_geodesic(model, v, t, IntegrationOptions{tolerance});
    return TangentVector{Point(x), w};
}

/// Geodesic flow phi_t on the unit tangent bundle.
inline UnitTangent geodesic_flow(const MetricModel& model, const UnitTangent& v, double t) {
    const TangentVector moved = exp_ivp(model, v.vector(), t);
    const double drift = std::abs(model.norm(moved) - 1.0);
    if (drift > 1e-8) throw NonConvergence("geodesic flow lost unit speed", drift);
    return UnitTangent::from(model, moved.base, moved.components);
}

inline constexpr double kDistanceCap = 50.0;

struct BvpOptions {
    bool model_seed = true;  // seed hyperbolic/flat shooting with the closed-form logarithm
    int max_iterations = 60;
    double endpoint_tolerance = 1e-8;
};

/// Geodesic from x to y by shooting: Newton on the endpoint map v -> exp(v, 1) with a
/// finite-difference Jacobian, damped by backtracking whenever the residual stalls.
inline GeodesicPath connect_bvp(const MetricModel& model, const Point& x, const Point& y, const BvpOptions& opts = {}) {
    model.require_domain(x);
    model.require_domain(y);
    if (x.coords == y.coords) throw DegenerateError("connect_bvp needs distinct endpoints");
    const int n = model.dim();
    const IntegrationOptions integ{};

    Vec v = (opts.model_seed && model.has_closed_form()) ? model_space::log_map(model, x.coords, y.coords)
                                                          : Vec(y.coords - x.coords);
    auto residual = [&](const Vec& w) -> std::optional<Vec> {
        try {
            return Vec(integrate_geodesic(model, TangentVector{x, w}, 1.0, integ).first - y.coords);
        } catch (const ChartExit&) {
            return std::nullopt;
        }
    };
    auto speed_of = [&](const Vec& w) { return model.scale(x.coords) * w.norm(); };
    if (speed_of(v) > kDistanceCap) throw RangeError("geodesic length exceeds the distance cap");

    std::optional<Vec> f = residual(v);
    // Shrink an infeasible seed toward x until it stays in the chart.
    for (int i = 0; !f && i < 60; ++i) {
        v *= 0.5;
        f = residual(v);
    }
    if (!f) throw NonConvergence("no feasible shooting seed", std::numeric_limits<double>::infinity());

    const double target = std::min(opts.endpoint_tolerance, 1e-11 * std::max(1.0, y.coords.norm()));
    double res = f->norm();
    for (int iter = 0; iter < opts.max_iterations && res > target; ++iter) {
        Mat jac(n, n);
        const double hstep = 1e-7 * std::max(1.0, v.norm());
        bool jac_ok = true;
        for (int j = 0; j < n; ++j) {
            Vec w = v;
            w[j] += hstep;
            auto fj = residual(w);
            if (!fj) {
                w[j] = v[j] - hstep;
                fj = residual(w);
                if (!fj) {
                    jac_ok = false;
                    break;
                }
                jac.col(j) = (*f - *fj) / hstep;
            } else {
                jac.col(j) = (*fj - *f) / hstep;
            }
        }
        if (!jac_ok) break;
        const Vec delta = jac.partialPivLu().solve(-*f);
        double alpha = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vec trial = v + alpha * delta;
            if (speed_of(trial) <= 2.0 * kDistanceCap) {
                if (auto ft = residual(trial); ft && ft->norm() < res) {
                    v = trial;
                    f = ft;
                    res = ft->norm();
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!improved) break;
    }
    if (!(res <= opts.endpoint_tolerance)) throw NonConvergence("geodesic shooting did not converge", res);
    if (speed_of(v) > kDistanceCap) throw RangeError("geodesic length exceeds the distance cap");

    GeodesicPath path;
    integrate_geodesic(model, TangentVector{x, v}, 1.0, integ, &path.samples);
    path.length = speed_of(v);
    return path;
}

/// Riemannian distance. The flat and hyperbolic models use their exact closed forms; conformal
/// metrics measure the shooting solution.
inline double distance(const MetricModel& model, const Point& x, const Point& y) {
    model.require_domain(x);
    model.require_domain(y);
    if (model.has_closed_form()) return model_space::distance(model, x.coords, y.coords);
    if (x.coords == y.coords) return 0.0;
    return connect_bvp(model, x, y).length;
}

/// Initial velocity of the unit-time geodesic from x to y.
inline Vec log_map(const MetricModel& model, const Point& x, const Point& y) {
    model.require_domain(x);
    model.require_domain(y);
    if (x.coords == y.coords) return Vec::Zero(model.dim());
    if (model.has_closed_form()) return model_space::log_map(model, x.coords, y.coords);
    return connect_bvp(model, x, y).initial_velocity();
}

/// The point (1 - t) x + t y: arc-length fraction t along the geodesic segment [x, y].
inline Point barycenter(const MetricModel& model, const Point& x, const Point& y, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw RangeError("barycenter parameter must lie in [0, 1]");
    model.require_domain(x);
    model.require_domain(y);
    if (t == 0.0 || x.coords == y.coords) return x;
    if (t == 1.0) return y;
    const GeodesicPath path = connect_bvp(model, x, y);
    return exp_ivp(model, TangentVector{x, path.initial_velocity()}, t).base;
}

}  // namespace hadamard
