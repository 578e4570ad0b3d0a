#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hadamard {

// Chart vectors never exceed dimension 3, so fixed max sizes keep them off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point or vector lies outside the chart domain of the model.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An integrated trajectory left the chart domain at time `exit_time`.
class ChartExit : public DomainError {
public:
    ChartExit(const std::string& what, double exit_time)
        : DomainError(what), exit_time_(exit_time) {}
    double exit_time() const { return exit_time_; }

private:
    double exit_time_;
};

/// Iterative solver gave up; `residual` is the last achieved error measure.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class EmptySetError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// A point of M in global chart coordinates.
struct Point {
    Vec coords;

    Point() = default;
    explicit Point(Vec c) : coords(std::move(c)) {}
    Point(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
        Eigen::Index i = 0;
        for (double v : c) coords[i++] = v;
    }

    int dim() const { return static_cast<int>(coords.size()); }
    double operator[](int i) const { return coords[i]; }
    double& operator[](int i) { return coords[i]; }
    bool finite() const { return coords.allFinite(); }
};

/// A chart vector attached to a base point.
struct TangentVector {
    Point base;
    Vec components;

    int dim() const { return base.dim(); }
};

/// Axis-aligned box in chart coordinates.
struct Box {
    Vec min;
    Vec max;

    int dim() const { return static_cast<int>(min.size()); }
    bool contains(const Vec& p, double tol = 0.0) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < min[i] - tol || p[i] > max[i] + tol) return false;
        return true;
    }
    Vec extent() const { return max - min; }
};

inline Vec make_vec(std::initializer_list<double> c) {
    Vec v(static_cast<Eigen::Index>(c.size()));
    Eigen::Index i = 0;
    for (double x : c) v[i++] = x;
    return v;
}

inline Vec make_vec(const std::vector<double>& c) {
    Vec v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[i];
    return v;
}

inline std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Cross product of two 3-vectors.
inline Vec cross3(const Vec& a, const Vec& b) {
    const Eigen::Vector3d c = Eigen::Vector3d(a[0], a[1], a[2]).cross(Eigen::Vector3d(b[0], b[1], b[2]));
    return Vec(c);
}

inline Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    return Box{make_vec(lo), make_vec(hi)};
}

}  // namespace hadamard
