#include "hadamard/metric.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hadamard;

namespace {

std::vector<MetricModel> all_models() {
    return {MetricModel::euclidean(2),
            MetricModel::euclidean(3),
            MetricModel::half_space(2),
            MetricModel::half_space(3),
            MetricModel::ball(2),
            MetricModel::ball(3),
            MetricModel::conformal(2, ConformalField::zero),
            MetricModel::conformal(2, ConformalField::quadratic),
            MetricModel::conformal(3, ConformalField::quadratic),
            MetricModel::conformal(2, ConformalField::log_radial),
            MetricModel::conformal(3, ConformalField::log_radial),
            MetricModel::conformal(2, ConformalField::neg_x_squared),
            MetricModel::conformal(3, ConformalField::radial_bump)};
}

// Random chart point where the metric coefficients stay moderate.
Vec random_point(const MetricModel& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec p(m.dim());
    for (int i = 0; i < m.dim(); ++i) p[i] = u(rng);
    if (m.kind() == MetricKind::half_space) p[m.dim() - 1] = 0.5 + 0.75 * (p[m.dim() - 1] + 1.0);
    if (m.kind() == MetricKind::ball) p *= 0.6 / std::sqrt(static_cast<double>(m.dim()));
    return p;
}

// Riemann tensor from centred differences of the closed-form Christoffels; test-only oracle.
double fd_sectional(const MetricModel& m, const Vec& x, const Vec& X, const Vec& Y) {
    const int n = m.dim();
    const double h = 1e-5;
    std::vector<Christoffel> dgam(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const Christoffel ga = christoffel(m, Point(a));
        const Christoffel gb = christoffel(m, Point(b));
        dgam[static_cast<std::size_t>(i)].n = n;
        for (int k = 0; k < 27; ++k) dgam[static_cast<std::size_t>(i)].data[static_cast<std::size_t>(k)] = (ga.data[static_cast<std::size_t>(k)] - gb.data[static_cast<std::size_t>(k)]) / (2 * h);
    }
    const Christoffel g = christoffel(m, Point(x));
    const Mat gt = metric_tensor(m, Point(x));
    // R^l_{kij} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}
    double num = 0.0;
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double r = dgam[static_cast<std::size_t>(i)](l, j, k) - dgam[static_cast<std::size_t>(j)](l, i, k);
                    for (int mm = 0; mm < n; ++mm) r += g(l, i, mm) * g(mm, j, k) - g(l, j, mm) * g(mm, i, k);
                    for (int q = 0; q < n; ++q) num += gt(l, q) * X[q] * r * X[i] * Y[j] * Y[k];
                }
    const double den = X.dot(gt * X) * Y.dot(gt * Y) - std::pow(X.dot(gt * Y), 2);
    return num / den;
}

}  // namespace

TEST(MetricTensor, Examples) {
    EXPECT_TRUE(metric_tensor(MetricModel::euclidean(2), Point{3, 4}).isApprox(Mat::Identity(2, 2)));
    const Mat g = metric_tensor(MetricModel::half_space(2), Point{0, 2});
    EXPECT_DOUBLE_EQ(g(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(g(1, 1), 0.25);
    EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
    EXPECT_EQ(metric_tensor(MetricModel::conformal(2, ConformalField::zero), Point{1, 1}), Mat::Identity(2, 2));
}

TEST(MetricTensor, ChartDomainViolations) {
    EXPECT_THROW(metric_tensor(MetricModel::half_space(2), Point{0, 0}), DomainError);
    EXPECT_THROW(metric_tensor(MetricModel::half_space(2), Point{0, -1}), DomainError);
    EXPECT_THROW(metric_tensor(MetricModel::ball(2), Point{1, 0}), DomainError);
    EXPECT_NO_THROW(metric_tensor(MetricModel::ball(2), Point{1 - 2e-9, 0}));
    EXPECT_THROW(metric_tensor(MetricModel::euclidean(2), Point{0, 0, 0}), DimensionError);
}

TEST(MetricTensor, SymmetricAndPositiveDefinite) {
    std::mt19937_64 rng(7);
    for (const auto& m : all_models())
        for (int i = 0; i < 1000; ++i) {
            const Point p(random_point(m, rng));
            const Mat g = metric_tensor(m, p);
            EXPECT_EQ((g - g.transpose()).norm(), 0.0);
            EXPECT_GT(g.llt().matrixL().toDenseMatrix().diagonal().minCoeff(), 0.0);
        }
}

TEST(Christoffel, Examples) {
    const Christoffel flat = christoffel(MetricModel::euclidean(3), Point{1, 2, 3});
    for (double v : flat.data) EXPECT_EQ(v, 0.0);
    const Christoffel h = christoffel(MetricModel::half_space(2), Point{0, 1});
    EXPECT_DOUBLE_EQ(h(0, 0, 1), -1.0);
    EXPECT_DOUBLE_EQ(h(0, 1, 0), -1.0);
    EXPECT_DOUBLE_EQ(h(1, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(h(1, 1, 1), -1.0);
    EXPECT_DOUBLE_EQ(h(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(h(0, 1, 1), 0.0);
    EXPECT_DOUBLE_EQ(h(1, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(h(1, 1, 0), 0.0);
    const Christoffel z = christoffel(MetricModel::conformal(2, ConformalField::zero), Point{0.3, -2});
    for (double v : z.data) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(christoffel(MetricModel::half_space(2), Point{0, -0.5}), DomainError);
}

TEST(Christoffel, LowerIndexSymmetryIsExact) {
    std::mt19937_64 rng(11);
    for (const auto& m : all_models())
        for (int s = 0; s < 200; ++s) {
            const Christoffel c = christoffel(m, Point(random_point(m, rng)));
            for (int k = 0; k < m.dim(); ++k)
                for (int i = 0; i < m.dim(); ++i)
                    for (int j = 0; j < m.dim(); ++j) EXPECT_EQ(c(k, i, j), c(k, j, i));
        }
}

TEST(Christoffel, CompatibleWithFiniteDifferencedMetric) {
    std::mt19937_64 rng(13);
    const double h = 1e-5;
    for (const auto& m : all_models()) {
        const int n = m.dim();
        for (int s = 0; s < 50; ++s) {
            const Vec x = random_point(m, rng);
            std::vector<Mat> dg(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                Vec a = x, b = x;
                a[i] += h;
                b[i] -= h;
                dg[static_cast<std::size_t>(i)] = (metric_tensor(m, Point(a)) - metric_tensor(m, Point(b))) / (2 * h);
            }
            const Mat ginv = metric_tensor(m, Point(x)).inverse();
            const Christoffel c = christoffel(m, Point(x));
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double expect = 0.0;
                        for (int l = 0; l < n; ++l)
                            expect += 0.5 * ginv(k, l) *
                                      (dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) - dg[static_cast<std::size_t>(l)](i, j));
                        EXPECT_NEAR(c(k, i, j), expect, 1e-6) << to_string(m.kind()) << "/" << to_string(m.field());
                    }
        }
    }
}

TEST(SectionalCurvature, Examples) {
    EXPECT_EQ(sectional_curvature(MetricModel::euclidean(2), {Point{1, 2}, make_vec({1, 0}), make_vec({1, 1})}), 0.0);
    EXPECT_NEAR(sectional_curvature(MetricModel::half_space(2), {Point{0, 1}, make_vec({1, 0}), make_vec({0, 1})}), -1.0,
                1e-12);
    const auto m = MetricModel::conformal(2, ConformalField::quadratic);
    for (const Point p : {Point{0, 0}, Point{0.5, -0.3}, Point{1.2, 0.7}}) {
        const double phi = p.coords.squaredNorm();
        EXPECT_NEAR(sectional_curvature(m, {p, make_vec({1, 0}), make_vec({0, 1})}), -4.0 * std::exp(-2.0 * phi), 1e-12);
    }
}

TEST(SectionalCurvature, DegenerateSpanRejected) {
    const auto m = MetricModel::half_space(2);
    EXPECT_THROW(sectional_curvature(m, {Point{0, 1}, make_vec({1, 1}), make_vec({2, 2})}), DegenerateError);
    EXPECT_THROW(sectional_curvature(m, {Point{0, 1}, make_vec({0, 0}), make_vec({0, 1})}), DegenerateError);
}

TEST(SectionalCurvature, BasisInvariance) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    for (const auto& m : all_models())
        for (int s = 0; s < 100; ++s) {
            const Point p(random_point(m, rng));
            Vec u(m.dim()), w(m.dim());
            for (int i = 0; i < m.dim(); ++i) {
                u[i] = nd(rng);
                w[i] = nd(rng);
            }
            const Vec u2 = 2.0 * u - 0.7 * w;
            const Vec w2 = 0.3 * u + 1.5 * w;
            EXPECT_NEAR(sectional_curvature(m, {p, u, w}), sectional_curvature(m, {p, u2, w2}), 1e-9);
        }
}

TEST(SectionalCurvature, HyperbolicModelsAreConstantMinusOne) {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> nd;
    for (const auto& m : {MetricModel::half_space(2), MetricModel::half_space(3), MetricModel::ball(2), MetricModel::ball(3)})
        for (int s = 0; s < 500; ++s) {
            const Point p(random_point(m, rng));
            Vec u(m.dim()), w(m.dim());
            for (int i = 0; i < m.dim(); ++i) {
                u[i] = nd(rng);
                w[i] = nd(rng);
            }
            EXPECT_NEAR(sectional_curvature(m, {p, u, w}), -1.0, 1e-9);
        }
}

TEST(SectionalCurvature, AgreesWithFiniteDifferenceRiemannOracle) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd;
    for (const auto& m : all_models())
        for (int s = 0; s < 20; ++s) {
            const Vec x = random_point(m, rng);
            Vec u(m.dim()), w(m.dim());
            for (int i = 0; i < m.dim(); ++i) {
                u[i] = nd(rng);
                w[i] = nd(rng);
            }
            const double expect = fd_sectional(m, x, u, w);
            EXPECT_NEAR(sectional_curvature(m, {Point(x), u, w}), expect, 1e-5 * std::max(1.0, std::abs(expect)))
                << to_string(m.kind()) << "/" << to_string(m.field());
        }
}

TEST(VerifyCurvatureBounds, Examples) {
    const auto flat = verify_curvature_bounds(MetricModel::euclidean(2), make_box({-3, -3}, {3, 3}), 5);
    EXPECT_EQ(flat.k_min, 0.0);
    EXPECT_EQ(flat.k_max, 0.0);
    EXPECT_TRUE(flat.all_in_bounds);

    const auto hyp = verify_curvature_bounds(MetricModel::half_space(2), make_box({-1, 0.5}, {1, 2}), 6);
    EXPECT_NEAR(hyp.k_min, -1.0, 1e-12);
    EXPECT_NEAR(hyp.k_max, -1.0, 1e-12);
    EXPECT_TRUE(hyp.all_in_bounds);

    const auto pos = verify_curvature_bounds(MetricModel::conformal(2, ConformalField::neg_x_squared, 1.0),
                                             make_box({-1, -1}, {1, 1}), 5);
    EXPECT_FALSE(pos.all_in_bounds);
    EXPECT_GT(pos.k_max, 0.0);
}

TEST(VerifyCurvatureBounds, ThreeDimensionalSamplesFourPlanesPerPoint) {
    const auto r = verify_curvature_bounds(MetricModel::ball(3), make_box({-0.3, -0.3, -0.3}, {0.3, 0.3, 0.3}), 3);
    EXPECT_EQ(r.samples, 27u * 4u);
    EXPECT_NEAR(r.k_min, -1.0, 1e-9);
    EXPECT_NEAR(r.k_max, -1.0, 1e-9);
    const auto q = verify_curvature_bounds(MetricModel::conformal(3, ConformalField::quadratic),
                                           make_box({-1, -1, -1}, {1, 1, 1}), 4, 99);
    EXPECT_LE(q.k_max, 0.0);
    const auto bump = verify_curvature_bounds(MetricModel::conformal(3, ConformalField::radial_bump, 1.0),
                                              make_box({-2, -2, -2}, {2, 2, 2}), 5);
    EXPECT_FALSE(bump.all_in_bounds);
}

TEST(VerifyCurvatureBounds, Errors) {
    EXPECT_THROW(verify_curvature_bounds(MetricModel::half_space(2), make_box({-1, -1}, {1, 1}), 4), DomainError);
    EXPECT_THROW(verify_curvature_bounds(MetricModel::ball(2), make_box({-1, -1}, {1, 1}), 4), DomainError);
    EXPECT_THROW(verify_curvature_bounds(MetricModel::euclidean(2), make_box({-1, -1}, {1, 1}), 1), RangeError);
}

TEST(MetricModel, DefaultCurvatureBounds) {
    EXPECT_EQ(MetricModel::euclidean(2).curvature_bound(), 0.0);
    EXPECT_EQ(MetricModel::half_space(3).curvature_bound(), 1.0);
    // phi = |x|^2 in 2D: K = -4 e^{-2 phi}, most negative at the origin.
    EXPECT_NEAR(MetricModel::conformal(2, ConformalField::quadratic).curvature_bound(), 2.0, 1e-12);
    EXPECT_EQ(MetricModel::conformal(2, ConformalField::quadratic, 3.0).curvature_bound(), 3.0);
    EXPECT_THROW(MetricModel::conformal(2, ConformalField::zero, -1.0), RangeError);
}
