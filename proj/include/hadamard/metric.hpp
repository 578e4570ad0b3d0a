#pragma once

#include "hadamard/types.hpp"

#include <array>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace hadamard {

enum class MetricKind { euclidean, half_space, ball, conformal };

/// Closed-form conformal exponents phi for metrics e^{2 phi} * (flat).
enum class ConformalField {
    zero,           // phi = 0
    quadratic,      // phi = |x|^2
    log_radial,     // phi = 1/2 ln(1 + |x|^2)
    neg_x_squared,  // phi = -x_1^2 (positive curvature, rejected by verification)
    radial_bump,    // phi = exp(-|x|^2) (mixed-sign curvature)
};

inline std::string_view to_string(MetricKind k) {
    switch (k) {
        case MetricKind::euclidean: return "euclidean";
        case MetricKind::half_space: return "hyperbolic-half-plane";
        case MetricKind::ball: return "hyperbolic-disk";
        case MetricKind::conformal: return "conformal";
    }
    return "?";
}

inline std::string_view to_string(ConformalField f) {
    switch (f) {
        case ConformalField::zero: return "zero";
        case ConformalField::quadratic: return "quadratic";
        case ConformalField::log_radial: return "log_radial";
        case ConformalField::neg_x_squared: return "neg_x_squared";
        case ConformalField::radial_bump: return "radial_bump";
    }
    return "?";
}

inline std::optional<ConformalField> conformal_field_from_string(std::string_view id) {
    for (auto f : {ConformalField::zero, ConformalField::quadratic, ConformalField::log_radial,
                   ConformalField::neg_x_squared, ConformalField::radial_bump})
        if (to_string(f) == id) return f;
    return std::nullopt;
}

/// Value, gradient and Hessian of the conformal exponent at a chart point.
struct FieldJet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

// Keeps every metric coefficient finite near the ideal boundary of the hyperbolic charts.
inline constexpr double kChartMargin = 1e-9;

/// A riemannian metric e^{2 phi} * (flat) on a global chart of R^n, n in {2, 3}.
///
/// The three hyperbolic/flat models are conformally flat as well, so every model is
/// handled through its exponent phi: euclidean phi = 0, half-space phi = -ln x_n,
/// ball phi = ln 2 - ln(1 - |x|^2).
class MetricModel {
public:
    static MetricModel euclidean(int n) { return MetricModel(MetricKind::euclidean, n, ConformalField::zero, 0.0); }
    static MetricModel half_space(int n) { return MetricModel(MetricKind::half_space, n, ConformalField::zero, 1.0); }
    static MetricModel ball(int n) { return MetricModel(MetricKind::ball, n, ConformalField::zero, 1.0); }
    static MetricModel conformal(int n, ConformalField f, std::optional<double> k = std::nullopt);

    MetricKind kind() const { return kind_; }
    int dim() const { return dim_; }
    ConformalField field() const { return field_; }
    double curvature_bound() const { return k_; }
    bool is_hyperbolic() const { return kind_ == MetricKind::half_space || kind_ == MetricKind::ball; }
    bool has_closed_form() const { return kind_ != MetricKind::conformal; }

    bool in_domain(const Vec& x) const {
        if (x.size() != dim_ || !x.allFinite()) return false;
        switch (kind_) {
            case MetricKind::half_space: return x[dim_ - 1] >= kChartMargin;
            case MetricKind::ball: return x.norm() <= 1.0 - kChartMargin;
            default: return true;
        }
    }

    void require_domain(const Point& p) const {
        if (p.dim() != dim_)
            throw DimensionError("point dimension " + std::to_string(p.dim()) + " does not match model dimension " +
                                 std::to_string(dim_));
        if (!in_domain(p.coords)) throw DomainError("point outside the chart domain of the " + std::string(to_string(kind_)) + " model");
    }

    double phi(const Vec& x) const {
        switch (kind_) {
            case MetricKind::euclidean: return 0.0;
            case MetricKind::half_space: return -std::log(x[dim_ - 1]);
            case MetricKind::ball: return std::log(2.0) - std::log(1.0 - x.squaredNorm());
            case MetricKind::conformal: break;
        }
        const double r2 = x.squaredNorm();
        switch (field_) {
            case ConformalField::zero: return 0.0;
            case ConformalField::quadratic: return r2;
            case ConformalField::log_radial: return 0.5 * std::log1p(r2);
            case ConformalField::neg_x_squared: return -x[0] * x[0];
            case ConformalField::radial_bump: return std::exp(-r2);
        }
        return 0.0;
    }

    Vec grad_phi(const Vec& x) const;
    FieldJet jet(const Vec& x) const;

    /// Conformal factor e^{phi}: riemannian length of a unit chart vector at x.
    double scale(const Vec& x) const { return std::exp(phi(x)); }

    double norm(const TangentVector& v) const { return scale(v.base.coords) * v.components.norm(); }
    double inner(const Vec& at, const Vec& a, const Vec& b) const { return std::exp(2.0 * phi(at)) * a.dot(b); }

private:
    MetricModel(MetricKind kind, int n, ConformalField f, double k) : kind_(kind), dim_(n), field_(f), k_(k) {
        if (n != 2 && n != 3) throw DimensionError("only dimensions 2 and 3 are supported");
    }

    MetricKind kind_;
    int dim_;
    ConformalField field_;
    double k_;
};

inline Vec MetricModel::grad_phi(const Vec& x) const {
    Vec g = Vec::Zero(dim_);
    switch (kind_) {
        case MetricKind::euclidean: return g;
        case MetricKind::half_space: g[dim_ - 1] = -1.0 / x[dim_ - 1]; return g;
        case MetricKind::ball: return 2.0 * x / (1.0 - x.squaredNorm());
        case MetricKind::conformal: break;
    }
    const double r2 = x.squaredNorm();
    switch (field_) {
        case ConformalField::zero: break;
        case ConformalField::quadratic: g = 2.0 * x; break;
        case ConformalField::log_radial: g = x / (1.0 + r2); break;
        case ConformalField::neg_x_squared: g[0] = -2.0 * x[0]; break;
        case ConformalField::radial_bump: g = -2.0 * std::exp(-r2) * x; break;
    }
    return g;
}

inline FieldJet MetricModel::jet(const Vec& x) const {
    FieldJet j;
    j.value = phi(x);
    j.grad = grad_phi(x);
    j.hess = Mat::Zero(dim_, dim_);
    const Mat id = Mat::Identity(dim_, dim_);
    const double r2 = x.squaredNorm();
    switch (kind_) {
        case MetricKind::euclidean: return j;
        case MetricKind::half_space: {
            const double y = x[dim_ - 1];
            j.hess(dim_ - 1, dim_ - 1) = 1.0 / (y * y);
            return j;
        }
        case MetricKind::ball: {
            const double s = 1.0 - r2;
            j.hess = 2.0 * id / s + 4.0 * x * x.transpose() / (s * s);
            return j;
        }
        case MetricKind::conformal: break;
    }
    switch (field_) {
        case ConformalField::zero: break;
        case ConformalField::quadratic: j.hess = 2.0 * id; break;
        case ConformalField::log_radial: {
            const double s = 1.0 + r2;
            j.hess = id / s - 2.0 * x * x.transpose() / (s * s);
            break;
        }
        case ConformalField::neg_x_squared: j.hess(0, 0) = -2.0; break;
        case ConformalField::radial_bump: {
            const double e = std::exp(-r2);
            j.hess = -2.0 * e * id + 4.0 * e * x * x.transpose();
            break;
        }
    }
    return j;
}

/// Metric tensor g_ij at p; always e^{2 phi} times the identity.
inline Mat metric_tensor(const MetricModel& model, const Point& p) {
    model.require_domain(p);
    const int n = model.dim();
    return std::exp(2.0 * model.phi(p.coords)) * Mat::Identity(n, n);
}

/// Christoffel symbols of the second kind, stored as gamma(k, i, j).
struct Christoffel {
    int n = 0;
    std::array<double, 27> data{};

    double operator()(int k, int i, int j) const { return data[static_cast<std::size_t>((k * n + i) * n + j)]; }
    double& operator()(int k, int i, int j) { return data[static_cast<std::size_t>((k * n + i) * n + j)]; }
};

/// Closed form for conformal metrics: Gamma^k_ij = d_k^i d_j phi + d_k^j d_i phi - d_ij d_k phi.
inline Christoffel christoffel(const MetricModel& model, const Point& p) {
    model.require_domain(p);
    const int n = model.dim();
    const Vec g = model.grad_phi(p.coords);
    Christoffel c;
    c.n = n;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = 0.0;
                if (k == i) v += g[j];
                if (k == j) v += g[i];
                if (i == j) v -= g[k];
                c(k, i, j) = v;
            }
    return c;
}

/// A 2-plane in the tangent space at `base`.
struct TangentPlane {
    Point base;
    Vec u;
    Vec w;
};

inline double gram_determinant(const MetricModel& model, const TangentPlane& plane) {
    const Vec& x = plane.base.coords;
    const double uu = model.inner(x, plane.u, plane.u);
    const double ww = model.inner(x, plane.w, plane.w);
    const double uw = model.inner(x, plane.u, plane.w);
    return uu * ww - uw * uw;
}

/// Sectional curvature K(plane).
///
/// For g = e^{2 phi} * flat and a flat-orthonormal basis X, Y of the plane:
///   K = e^{-2 phi} ( -H(X,X) - H(Y,Y) + (X.grad)^2 + (Y.grad)^2 - |grad|^2 )
/// with H the Hessian of phi. Conformality makes flat and riemannian orthogonality agree,
/// so the result depends only on the plane.
inline double sectional_curvature(const MetricModel& model, const TangentPlane& plane) {
    model.require_domain(plane.base);
    if (plane.u.size() != model.dim() || plane.w.size() != model.dim())
        throw DimensionError("tangent plane spanning vectors have the wrong dimension");
    if (!(gram_determinant(model, plane) > 1e-12)) throw DegenerateError("tangent plane span is degenerate");
    const Vec x_axis = plane.u.normalized();
    Vec y_axis = plane.w - plane.w.dot(x_axis) * x_axis;
    if (y_axis.norm() < 1e-14 * plane.w.norm()) throw DegenerateError("tangent plane span is degenerate");
    y_axis.normalize();
    const FieldJet j = model.jet(plane.base.coords);
    const double gx = j.grad.dot(x_axis);
    const double gy = j.grad.dot(y_axis);
    const double hxx = x_axis.dot(j.hess * x_axis);
    const double hyy = y_axis.dot(j.hess * y_axis);
    return std::exp(-2.0 * j.value) * (-hxx - hyy + gx * gx + gy * gy - j.grad.squaredNorm());
}

struct CurvatureReport {
    double k_min = std::numeric_limits<double>::infinity();
    double k_max = -std::numeric_limits<double>::infinity();
    bool all_in_bounds = true;
    std::size_t samples = 0;
};

inline void require_box_in_domain(const MetricModel& model, const Box& region) {
    if (region.dim() != model.dim()) throw DimensionError("region dimension does not match the model");
    for (int i = 0; i < region.dim(); ++i)
        if (!(region.min[i] <= region.max[i])) throw DomainError("region has min > max");
    const int n = model.dim();
    for (int corner = 0; corner < (1 << n); ++corner) {
        Vec c(n);
        for (int i = 0; i < n; ++i) c[i] = (corner >> i) & 1 ? region.max[i] : region.min[i];
        if (!model.in_domain(c)) throw DomainError("region is not inside the chart domain");
    }
}

/// Samples K on a per-axis grid over `region` and checks -k^2 <= K <= 0 (tolerance 1e-6).
/// In dimension 3 every grid point contributes the three coordinate planes and one
/// random plane drawn from a generator seeded with `seed`.
inline CurvatureReport verify_curvature_bounds(const MetricModel& model, const Box& region, int grid,
                                               std::uint64_t seed = 0x5eed) {
    require_box_in_domain(model, region);
    if (grid < 2) throw RangeError("curvature verification grid needs at least 2 samples per axis");
    const int n = model.dim();
    const double k = model.curvature_bound();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    CurvatureReport report;
    auto record = [&](double kval) {
        report.k_min = std::min(report.k_min, kval);
        report.k_max = std::max(report.k_max, kval);
        ++report.samples;
        if (kval < -k * k - 1e-6 || kval > 1e-6) report.all_in_bounds = false;
    };
    std::array<int, 3> idx{};
    const int total = n == 2 ? grid * grid : grid * grid * grid;
    for (int flat = 0; flat < total; ++flat) {
        int rest = flat;
        Vec p(n);
        for (int a = 0; a < n; ++a) {
            idx[static_cast<std::size_t>(a)] = rest % grid;
            rest /= grid;
            p[a] = region.min[a] + (region.max[a] - region.min[a]) * idx[static_cast<std::size_t>(a)] / (grid - 1);
        }
        const Point base(p);
        if (n == 2) {
            record(sectional_curvature(model, {base, make_vec({1, 0}), make_vec({0, 1})}));
            continue;
        }
        const Mat id = Mat::Identity(3, 3);
        record(sectional_curvature(model, {base, id.col(0), id.col(1)}));
        record(sectional_curvature(model, {base, id.col(0), id.col(2)}));
        record(sectional_curvature(model, {base, id.col(1), id.col(2)}));
        Vec a(3), b(3);
        do {
            for (int i = 0; i < 3; ++i) {
                a[i] = normal(rng);
                b[i] = normal(rng);
            }
        } while (cross3(a, b).norm() < 1e-3 * a.norm() * b.norm());
        record(sectional_curvature(model, {base, a, b}));
    }
    return report;
}

inline MetricModel MetricModel::conformal(int n, ConformalField f, std::optional<double> k) {
    MetricModel m(MetricKind::conformal, n, f, 0.0);
    if (k) {
        if (*k < 0.0 || !std::isfinite(*k)) throw RangeError("curvature bound k must be a nonnegative real");
        m.k_ = *k;
        return m;
    }
    // Default bound: sup of -K over the default verification grid.
    Box box{Vec::Constant(n, -2.0), Vec::Constant(n, 2.0)};
    m.k_ = std::numeric_limits<double>::infinity();
    const CurvatureReport r = verify_curvature_bounds(m, box, 9);
    m.k_ = std::sqrt(std::max(0.0, -r.k_min));
    return m;
}

}  // namespace hadamard
