#pragma once

#include "hadamard/geodesy.hpp"

#include <memory>

namespace hadamard {

/// Truncation schedule for numeric Busemann evaluation.
struct BusemannSchedule {
    double t0 = 8.0;
    double t_max = 1024.0;
    double tolerance = 1e-5;
};

enum class BusemannMode { automatic, numeric, closed_form };

/// B(x) = lim_{T -> inf} d(x, gamma(T)) - T for the ray gamma of `direction`; B(base) = 0.
struct BusemannFunctional {
    UnitTangent direction;
    BusemannMode mode = BusemannMode::automatic;
    BusemannSchedule schedule{};

    const Point& base() const { return direction.base(); }
};

struct BusemannValue {
    double value = 0.0;
    double gap = 0.0;  // Cauchy gap between the last two accepted estimates
    bool converged = true;
    double horizon = 0.0;  // largest truncation time used (0 for closed forms)
};

/// Closed-form Busemann function for the euclidean, half-space and ball models.
inline double busemann_closed_form(const MetricModel& model, const BusemannFunctional& f, const Point& x) {
    if (!model.has_closed_form()) throw Error("busemann_closed_form: unsupported model (conformal)");
    model.require_domain(x);
    return model_space::busemann(model, f.direction.vector(), x.coords);
}

/// Evaluates one Busemann functional repeatedly. Numeric mode precomputes the ray points at the
/// truncation times T0, 2 T0, ... (clamped where the ray leaves the chart) once.
class BusemannEvaluator {
public:
    BusemannEvaluator(const MetricModel& model, BusemannFunctional f) : model_(model), f_(std::move(f)) {
        ray_ = f_.direction.vector();
        closed_ = f_.mode == BusemannMode::closed_form ||
                  (f_.mode == BusemannMode::automatic && model_.has_closed_form());
        if (closed_ && !model_.has_closed_form()) throw Error("busemann_closed_form: unsupported model (conformal)");
        if (!closed_) build_levels();
        if (closed_ && model_.kind() != MetricKind::euclidean) ideal_ = model_space::ideal_point(model_, f_.direction.vector());
    }

    const BusemannFunctional& functional() const { return f_; }
    bool closed_form() const { return closed_; }

    BusemannValue operator()(const Point& x) const {
        if (closed_) return {model_space::busemann(model_, ray_, ideal_, x.coords), 0.0, true, 0.0};
        return numeric(x);
    }

    double value(const Point& x) const { return (*this)(x).value; }

private:
    struct Level {
        double time;
        Point point;
        double base_distance;
    };

    void build_levels() {
        const BusemannSchedule& s = f_.schedule;
        double t_limit = s.t_max;
        if (!model_.has_closed_form()) t_limit = std::min(t_limit, 0.8 * kDistanceCap);
        TangentVector state = f_.direction.vector();
        double now = 0.0;
        for (double target = s.t0; now < t_limit; target *= 2.0) {
            const double t = std::min(target, t_limit);
            try {
                state = exp_ivp(model_, state, t - now);
                now = t;
            } catch (const ChartExit& e) {
                // Last usable level sits a little inside the exit time.
                const double t_exit = now + e.exit_time() - 0.5;
                if (t_exit > now + 1e-3) {
                    state = exp_ivp(model_, state, t_exit - now);
                    now = t_exit;
                    push_level(now, state.base);
                }
                break;
            }
            push_level(now, state.base);
        }
        if (levels_.empty()) throw ChartExit("Busemann ray leaves the chart before the first truncation time", now);
    }

    void push_level(double t, const Point& p) {
        levels_.push_back({t, p, distance(model_, f_.base(), p)});
    }

    // Truncations d(x, z_T) - d(base, z_T) (equal to d(x, z_T) - T on an exact ray, but insensitive
    // to integration error along the ray). Algebraic 1/T convergence (flat directions) is
    // accelerated by polynomial extrapolation in 1/T; exponential convergence is accepted raw.
    BusemannValue numeric(const Point& x) const {
        const double tol = f_.schedule.tolerance;
        std::vector<double> h, raw;
        std::vector<double> neville;  // current diagonal of the Neville table
        double prev_ext = std::numeric_limits<double>::quiet_NaN();
        double prev_ext_gap = std::numeric_limits<double>::infinity();
        BusemannValue out;
        out.converged = false;
        out.gap = std::numeric_limits<double>::infinity();
        for (const Level& lv : levels_) {
            const double v = distance(model_, x, lv.point) - lv.base_distance;
            h.push_back(1.0 / lv.time);
            raw.push_back(v);
            // Neville extrapolation to h = 0 over all levels so far.
            neville.push_back(v);
            const std::size_t m = neville.size();
            for (std::size_t j = m - 1; j-- > 0;) {
                const double hi = h[j];
                const double hk = h[m - 1];
                neville[j] = (hk * neville[j] - hi * neville[j + 1]) / (hk - hi);
            }
            const double ext = neville.front();
            out.horizon = lv.time;
            if (raw.size() >= 2) {
                const double raw_gap = std::abs(raw[raw.size() - 1] - raw[raw.size() - 2]);
                if (raw_gap < tol) return {v, raw_gap, true, lv.time};
                out.value = v;
                out.gap = raw_gap;
            } else {
                out.value = v;
            }
            if (raw.size() >= 3) {
                // Extrapolants can cross by accident, so two successive small gaps are required.
                const double ext_gap = std::abs(ext - prev_ext);
                if (ext_gap < tol && prev_ext_gap < tol) return {ext, std::max(ext_gap, prev_ext_gap), true, lv.time};
                prev_ext_gap = ext_gap;
                if (ext_gap < out.gap) {
                    out.value = ext;
                    out.gap = ext_gap;
                }
            }
            prev_ext = ext;
        }
        return out;
    }

    MetricModel model_;
    BusemannFunctional f_;
    bool closed_ = false;
    TangentVector ray_;
    model_space::IdealPoint ideal_;
    std::vector<Level> levels_;
};

/// Numeric Busemann value with its achieved Cauchy gap; throws NonConvergence past the horizon.
inline BusemannValue busemann_numeric(const MetricModel& model, const BusemannFunctional& f, const Point& x) {
    model.require_domain(x);
    BusemannFunctional g = f;
    g.mode = BusemannMode::numeric;
    const BusemannValue v = BusemannEvaluator(model, g)(x);
    if (!v.converged) throw NonConvergence("Busemann truncation did not converge", v.gap);
    return v;
}

/// Sublevel set {B < level} (open) or {B <= level} (closed) of a Busemann functional.
struct HoroballSpec {
    BusemannFunctional functional;
    double level = 0.0;
    bool open = true;
};

inline bool horoball_contains(const MetricModel& model, const HoroballSpec& ball, const Point& x) {
    const double b = BusemannEvaluator(model, ball.functional).value(x);
    return ball.open ? b < ball.level : b <= ball.level;
}

/// Open horoball of the forward ray of v, normalised at v's base.
inline HoroballSpec stable_horoball(const MetricModel&, const UnitTangent& v) {
    return HoroballSpec{BusemannFunctional{v}, 0.0, true};
}

/// Open horoball of the backward ray of v (direction -v), normalised at v's base.
inline HoroballSpec unstable_horoball(const MetricModel&, const UnitTangent& v) {
    return HoroballSpec{BusemannFunctional{v.reversed()}, 0.0, true};
}

/// Horosphere {B_w = 0} through the plane's base whose ray direction w is the unit normal of the
/// plane, oriented by normal_sign. Dimension 3 only.
inline HoroballSpec tangent_horosphere(const MetricModel& model, const TangentPlane& plane, int normal_sign) {
    if (model.dim() != 3) throw DimensionError("tangent_horosphere requires dimension 3");
    if (!(gram_determinant(model, plane) > 1e-12)) throw DegenerateError("tangent plane span is degenerate");
    // Conformal metrics: flat and riemannian normals coincide.
    const Vec normal = cross3(plane.u, plane.w) * (normal_sign >= 0 ? 1.0 : -1.0);
    return HoroballSpec{BusemannFunctional{UnitTangent::from(model, plane.base, normal)}, 0.0, false};
}

}  // namespace hadamard
