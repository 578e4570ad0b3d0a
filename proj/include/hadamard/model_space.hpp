#pragma once

// Closed-form geometry of the flat and constant-curvature -1 model spaces.

#include "hadamard/metric.hpp"

namespace hadamard::model_space {

/// Moebius addition in the unit ball (curvature -1).
inline Vec mobius_add(const Vec& a, const Vec& b) {
    const double ab = a.dot(b);
    const double a2 = a.squaredNorm();
    const double b2 = b.squaredNorm();
    return ((1.0 + 2.0 * ab + b2) * a + (1.0 - a2) * b) / (1.0 + 2.0 * ab + a2 * b2);
}

/// Geodesic distance. Uses the sinh(d/2) forms, which stay accurate for nearby points.
inline double distance(const MetricModel& model, const Vec& x, const Vec& y) {
    const double chord = (x - y).norm();
    const int n = model.dim();
    switch (model.kind()) {
        case MetricKind::euclidean: return chord;
        case MetricKind::half_space: return 2.0 * std::asinh(chord / (2.0 * std::sqrt(x[n - 1] * y[n - 1])));
        case MetricKind::ball:
            return 2.0 * std::asinh(chord / std::sqrt((1.0 - x.squaredNorm()) * (1.0 - y.squaredNorm())));
        case MetricKind::conformal: break;
    }
    throw Error("no closed-form distance for conformal metrics");
}

/// Initial chart velocity of the unit-time geodesic from x to y (inverse exponential map).
inline Vec log_map(const MetricModel& model, const Vec& x, const Vec& y) {
    const int n = model.dim();
    switch (model.kind()) {
        case MetricKind::euclidean: return y - x;
        case MetricKind::half_space: {
            const double p = x[n - 1];
            const double q = y[n - 1];
            Vec horizontal = (y - x).head(n - 1);
            const double b = horizontal.norm();
            Vec v = Vec::Zero(n);
            if (b <= 1e-15 * (p + q)) {
                v[n - 1] = p * std::log(q / p);
                return v;
            }
            // Geodesic is a half circle in the vertical plane through x and y, centred on the
            // ideal boundary at horizontal offset c from x.
            const double c = (b * b + q * q - p * p) / (2.0 * b);
            const double d = distance(model, x, y);
            const double len = std::hypot(p, c);
            const Vec e = horizontal / b;
            v.head(n - 1) = d * p * (p / len) * e;
            v[n - 1] = d * p * (c / len);
            return v;
        }
        case MetricKind::ball: {
            const Vec w = mobius_add(-x, y);
            const double r = w.norm();
            if (r == 0.0) return Vec::Zero(n);
            return (1.0 - x.squaredNorm()) * std::atanh(r) * w / r;
        }
        case MetricKind::conformal: break;
    }
    throw Error("no closed-form logarithm for conformal metrics");
}

/// Endpoint at infinity of the geodesic ray with initial velocity v.
struct IdealPoint {
    bool at_infinity = false;  // half-space only: the vertical upward end
    Vec xi;                    // boundary point (half-space: last coordinate 0; ball: unit vector)
};

inline IdealPoint ideal_point(const MetricModel& model, const TangentVector& v) {
    const int n = model.dim();
    const Vec& p = v.base.coords;
    const Vec u = v.components.normalized();
    switch (model.kind()) {
        case MetricKind::half_space: {
            const Vec horizontal = u.head(n - 1);
            const double a = horizontal.norm();
            const double b = u[n - 1];
            IdealPoint ip;
            ip.xi = p;
            ip.xi[n - 1] = 0.0;
            if (a <= 1e-12) {
                ip.at_infinity = b > 0.0;
                return ip;
            }
            const double c = p[n - 1] * b / a;
            const double radius = std::hypot(c, p[n - 1]);
            ip.xi.head(n - 1) += (c + radius) * horizontal / a;
            return ip;
        }
        case MetricKind::ball: return {false, mobius_add(p, u)};
        default: break;
    }
    throw Error("ideal points are only tracked for the hyperbolic models");
}

/// Busemann function of the ray v, normalised to vanish at the ray's base point.
/// Busemann function of the ray v given its ideal point (precomputed by ideal_point).
inline double busemann(const MetricModel& model, const TangentVector& v, const IdealPoint& ip, const Vec& x) {
    const Vec& p = v.base.coords;
    const int n = model.dim();
    switch (model.kind()) {
        case MetricKind::euclidean: return -(x - p).dot(v.components.normalized());
        case MetricKind::half_space: {
            if (ip.at_infinity) return std::log(p[n - 1]) - std::log(x[n - 1]);
            return std::log((x - ip.xi).squaredNorm() / x[n - 1]) - std::log((p - ip.xi).squaredNorm() / p[n - 1]);
        }
        case MetricKind::ball: {
            return std::log((ip.xi - x).squaredNorm() / (1.0 - x.squaredNorm())) -
                   std::log((ip.xi - p).squaredNorm() / (1.0 - p.squaredNorm()));
        }
        case MetricKind::conformal: break;
    }
    throw Error("no closed-form Busemann function for conformal metrics");
}

inline double busemann(const MetricModel& model, const TangentVector& v, const Vec& x) {
    if (model.kind() == MetricKind::euclidean) return busemann(model, v, IdealPoint{}, x);
    return busemann(model, v, ideal_point(model, v), x);
}

}  // namespace hadamard::model_space
