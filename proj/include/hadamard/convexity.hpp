#pragma once

#include "hadamard/sets.hpp"

#include <random>

namespace hadamard {

inline constexpr double kHoroTolerance = 1e-4;       // tol_horo before the Busemann gap is added
inline constexpr double kKinkThreshold = 0.05;       // gradient deviation flagged as a kink
inline constexpr double kGradientStep = 1e-4;        // central-difference step h
inline constexpr double kBarycenterTolerance = 1e-7; // membership slack for points on connecting geodesics

enum class Verdict { consistent_at_resolution, violated };

inline std::string to_string(Verdict v) {
    return v == Verdict::violated ? "violated" : "consistent-at-resolution";
}

enum class WitnessKind { non_unique_projection, horobowl, gradient_kink, geodesic };

inline std::string to_string(WitnessKind k) {
    switch (k) {
        case WitnessKind::non_unique_projection: return "non-unique-projection";
        case WitnessKind::horobowl: return "horobowl";
        case WitnessKind::gradient_kink: return "gradient-kink";
        case WitnessKind::geodesic: return "geodesic";
    }
    return "unknown";
}

/// A failure found at one probe. `points` are the competing minimisers (non-unique), the
/// projection and the offending member (horobowl), or the pair endpoints (geodesic).
struct Witness {
    WitnessKind kind = WitnessKind::non_unique_projection;
    Point probe;
    std::vector<Point> points;
    std::vector<double> values;  // distances, Busemann values, or the gradient norm
    double t = 0.0;              // barycentric parameter of a geodesic witness
};

struct GradientReport {
    std::size_t probes = 0;
    double worst_deviation = 0.0;
    double min_norm = std::numeric_limits<double>::infinity();
    double max_norm = 0.0;
};

struct ConvexityCertificate {
    Verdict verdict = Verdict::consistent_at_resolution;
    Box region;
    int resolution = 0;
    std::size_t probes = 0;            // exterior probes actually tested
    std::size_t skipped_members = 0;   // grid nodes lying in G (or on its boundary)
    std::size_t skipped_edge = 0;      // projection fell on the region boundary (truncation artefact)
    double min_uniqueness_margin = std::numeric_limits<double>::infinity();
    double min_horobowl_margin = std::numeric_limits<double>::infinity();
    double horobowl_tolerance = kHoroTolerance;
    GradientReport gradient;
    std::size_t violations = 0;        // total; only the first `witness_limit` are kept
    std::vector<Witness> witnesses;
};

struct CertifyOptions {
    std::size_t motzkin_stride = 4;
    double gradient_step = kGradientStep;
    std::size_t witness_limit = 64;
};

/// Probe grid: the (resolution + 1)^n nodes of the region, so both faces and the midplanes
/// (symmetry axes of centred scenes) are sampled.
inline std::vector<Point> probe_nodes(const Box& region, int resolution) {
    if (resolution < 1) throw RangeError("probe resolution must be positive");
    const int n = static_cast<int>(region.min.size());
    const int m = resolution + 1;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(m);
    std::vector<Point> out;
    out.reserve(total);
    for (std::size_t f = 0; f < total; ++f) {
        Vec p(n);
        std::size_t r = f;
        for (int i = 0; i < n; ++i) {
            const int k = static_cast<int>(r % static_cast<std::size_t>(m));
            r /= static_cast<std::size_t>(m);
            p[i] = region.min[i] + (region.max[i] - region.min[i]) * k / resolution;
        }
        out.emplace_back(std::move(p));
    }
    return out;
}

/// Uniqueness failure of a query: two clusters at least 10 sep_min apart whose distances agree
/// within 2 tol_proj. Returns the margin (gap to the second cluster, +inf with one cluster).
struct UniquenessOutcome {
    double margin = std::numeric_limits<double>::infinity();
    std::optional<Witness> witness;
};

inline UniquenessOutcome assess_uniqueness(const Point& x, const ProjectionResult& r) {
    UniquenessOutcome out;
    if (r.clusters.size() < 2) return out;
    out.margin = r.clusters[1].distance - r.clusters[0].distance;
    const MinimizerCluster& best = r.clusters.front();
    for (std::size_t j = 1; j < r.clusters.size(); ++j) {
        const MinimizerCluster& c = r.clusters[j];
        if (c.distance > best.distance + 2.0 * kProjectionTolerance) break;
        if (c.on_region_edge || best.on_region_edge) continue;
        if ((c.point.coords - best.point.coords).norm() < 10.0 * kMinSeparation) continue;
        Witness w{WitnessKind::non_unique_projection, x, {best.point, c.point}, {best.distance, c.distance}, 0.0};
        if (detail::lex_less(w.points[1].coords, w.points[0].coords)) {
            std::swap(w.points[0], w.points[1]);
            std::swap(w.values[0], w.values[1]);
        }
        out.witness = std::move(w);
        break;
    }
    return out;
}

/// Non-uniqueness witnesses over the probe grid.
inline ConvexityCertificate check_projection_uniqueness(const SetSampler& sampler, int resolution,
                                                        const CertifyOptions& opts = {}) {
    ConvexityCertificate cert;
    cert.region = sampler.search().region;
    cert.resolution = resolution;
    for (const Point& x : probe_nodes(cert.region, resolution)) {
        if (sampler.contains(x)) {
            ++cert.skipped_members;
            continue;
        }
        const ProjectionResult r = sampler.query(x);
        if (r.region_edge) {
            ++cert.skipped_edge;
            continue;
        }
        ++cert.probes;
        const UniquenessOutcome u = assess_uniqueness(x, r);
        cert.min_uniqueness_margin = std::min(cert.min_uniqueness_margin, u.margin);
        if (u.witness) {
            ++cert.violations;
            if (cert.witnesses.size() < opts.witness_limit) cert.witnesses.push_back(*u.witness);
        }
    }
    if (cert.probes == 0) throw EmptySetError("no exterior probes in the region");
    if (cert.violations > 0) cert.verdict = Verdict::violated;
    return cert;
}

inline ConvexityCertificate check_projection_uniqueness(const MetricModel& model, const ClosedSetSpec& set,
                                                        const Box& region, int resolution) {
    return check_projection_uniqueness(SetSampler(model, set, SearchSpec{region, resolution}), resolution);
}

struct HorobowlOutcome {
    double margin = std::numeric_limits<double>::infinity();
    double tolerance = kHoroTolerance;
    std::optional<Witness> witness;
};

/// The open horobowl of the ray [pi(x), x) must miss G: min of B over sampled members of G is
/// compared with -(1e-4 + Busemann gap). Members are the sampler's boundary candidates, which
/// include the region faces; B has no interior minima, so these carry the minimum.
inline HorobowlOutcome check_horobowl_condition(const SetSampler& sampler, const Point& x, const Point& foot) {
    const MetricModel& model = sampler.model();
    const Vec dir = log_map(model, foot, x);
    if (dir.norm() == 0.0) throw DegenerateError("horobowl check needs a probe outside G");
    const BusemannEvaluator eval(model, BusemannFunctional{UnitTangent::from(model, foot, dir)});
    const auto& cands = sampler.candidates();
    // Numeric Busemann values cost a shooting solve per truncation level; thin the sample.
    const std::size_t stride = eval.closed_form() ? 1 : std::max<std::size_t>(1, cands.size() / 200);
    HorobowlOutcome out;
    double worst_gap = 0.0;
    const Point* arg = nullptr;
    auto consider = [&](const Point& g) {
        const BusemannValue b = eval(g);
        worst_gap = std::max(worst_gap, b.gap);
        if (b.value < out.margin) {
            out.margin = b.value;
            arg = &g;
        }
    };
    consider(foot);
    for (std::size_t i = 0; i < cands.size(); i += stride) consider(cands[i].point);
    out.tolerance = kHoroTolerance + worst_gap;
    if (out.margin < -out.tolerance)
        out.witness = Witness{WitnessKind::horobowl, x, {foot, *arg}, {0.0, out.margin}, 0.0};
    return out;
}

inline HorobowlOutcome check_horobowl_condition(const MetricModel& model, const ClosedSetSpec& set, const Point& x,
                                                const SearchSpec& search) {
    const SetSampler sampler(model, set, search);
    const Point foot = project(sampler, x);
    return check_horobowl_condition(sampler, x, foot);
}

/// |‖grad d(., G)‖_g - 1| at x from a central-difference chart gradient.
/// The stencil queries are warm-started from the minimisers at x (every cluster, so both sides
/// of a medial axis are represented).
inline double motzkin_gradient_norm(const SetSampler& sampler, const Point& x, const ProjectionResult& at_x,
                                    double h = kGradientStep) {
    const MetricModel& model = sampler.model();
    if (!(at_x.distance > 10.0 * h)) throw RangeError("probe too close to the set for the gradient stencil");
    std::vector<Point> seeds;
    for (const auto& c : at_x.clusters) seeds.push_back(c.point);
    Vec grad(model.dim());
    for (int i = 0; i < model.dim(); ++i) {
        Vec a = x.coords, b = x.coords;
        a[i] += h;
        b[i] -= h;
        grad[i] = (sampler.query_from(Point(a), seeds).distance - sampler.query_from(Point(b), seeds).distance) / (2.0 * h);
    }
    // g^{ij} = e^{-2 phi} delta^{ij}, so ‖grad u‖_g = e^{-phi} |du|.
    return grad.norm() / model.scale(x.coords);
}

inline double motzkin_gradient_norm(const SetSampler& sampler, const Point& x, double h = kGradientStep) {
    return motzkin_gradient_norm(sampler, x, sampler.query(x), h);
}

inline double check_motzkin_gradient(const SetSampler& sampler, const Point& x, double h = kGradientStep) {
    return std::abs(motzkin_gradient_norm(sampler, x, h) - 1.0);
}

inline double check_motzkin_gradient(const MetricModel& model, const ClosedSetSpec& set, const Point& x,
                                     const SearchSpec& search, double h = kGradientStep) {
    return check_motzkin_gradient(SetSampler(model, set, search), x, h);
}

/// Full weak-convexity certificate: uniqueness at every exterior probe, the horobowl condition
/// where the projection is unique, and the gradient criterion on every `motzkin_stride`-th probe.
/// A consistent verdict holds at the stated resolution only.
inline ConvexityCertificate certify_weak_convexity(const SetSampler& sampler, int resolution,
                                                   const CertifyOptions& opts = {}) {
    ConvexityCertificate cert;
    cert.region = sampler.search().region;
    cert.resolution = resolution;
    auto record = [&](Witness w) {
        ++cert.violations;
        if (cert.witnesses.size() < opts.witness_limit) cert.witnesses.push_back(std::move(w));
    };
    for (const Point& x : probe_nodes(cert.region, resolution)) {
        if (sampler.contains(x)) {
            ++cert.skipped_members;
            continue;
        }
        const ProjectionResult r = sampler.query(x);
        if (r.region_edge) {
            ++cert.skipped_edge;
            continue;
        }
        const std::size_t index = cert.probes++;
        const UniquenessOutcome u = assess_uniqueness(x, r);
        cert.min_uniqueness_margin = std::min(cert.min_uniqueness_margin, u.margin);
        if (u.witness) {
            record(*u.witness);
        } else if (r.unique) {
            const HorobowlOutcome hb = check_horobowl_condition(sampler, x, r.minimizers.front());
            cert.min_horobowl_margin = std::min(cert.min_horobowl_margin, hb.margin);
            cert.horobowl_tolerance = std::max(cert.horobowl_tolerance, hb.tolerance);
            if (hb.witness) record(*hb.witness);
        }
        if (index % opts.motzkin_stride == 0 && r.distance > 10.0 * opts.gradient_step) {
            const double norm = motzkin_gradient_norm(sampler, x, r, opts.gradient_step);
            GradientReport& g = cert.gradient;
            ++g.probes;
            g.min_norm = std::min(g.min_norm, norm);
            g.max_norm = std::max(g.max_norm, norm);
            g.worst_deviation = std::max(g.worst_deviation, std::abs(norm - 1.0));
            if (std::abs(norm - 1.0) > kKinkThreshold)
                record(Witness{WitnessKind::gradient_kink, x, r.minimizers, {norm}, 0.0});
        }
    }
    if (cert.probes == 0) throw EmptySetError("no exterior probes in the region");
    if (cert.violations > 0) cert.verdict = Verdict::violated;
    return cert;
}

inline ConvexityCertificate certify_weak_convexity(const MetricModel& model, const ClosedSetSpec& set,
                                                   const Box& region, int resolution,
                                                   const CertifyOptions& opts = {}) {
    return certify_weak_convexity(SetSampler(model, set, SearchSpec{region, resolution}), resolution, opts);
}

struct GeodesicConvexityReport {
    std::size_t pairs = 0;
    std::size_t checks = 0;
    std::vector<Witness> violations;  // one per offending pair, at its worst t
    bool convex() const { return violations.empty(); }
};

/// Members of G drawn deterministically from the sampler's boundary candidates and member cells.
inline std::vector<std::pair<Point, Point>> sample_member_pairs(const SetSampler& sampler, std::size_t count,
                                                                std::uint64_t seed) {
    std::vector<Point> members;
    for (const auto& c : sampler.candidates()) members.push_back(c.point);
    const CellGrid& grid = sampler.grid();
    for (std::size_t c = 0; c < grid.size(); ++c) {
        const Vec p = grid.center(c);
        if (sampler.contains(Point(p))) members.emplace_back(p);
    }
    if (members.size() < 2) throw EmptySetError("fewer than two members to pair");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    std::vector<std::pair<Point, Point>> pairs;
    while (pairs.size() < count) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (members[i].coords == members[j].coords) continue;
        pairs.emplace_back(members[i], members[j]);
    }
    return pairs;
}

/// Checks barycentre(a, b, t) in G for t on a 32-point grid of [0, 1].
inline GeodesicConvexityReport check_geodesic_convexity(const MetricModel& model, const ClosedSetSpec& set,
                                                        const std::vector<std::pair<Point, Point>>& pairs) {
    if (pairs.empty()) throw EmptySetError("no member pairs to test");
    const SetOracle oracle(model, set);
    GeodesicConvexityReport report;
    for (const auto& [a, b] : pairs) {
        if (!oracle.contains(a.coords) || !oracle.contains(b.coords))
            throw RangeError("geodesic convexity pairs must be members of the set");
        ++report.pairs;
        if (a.coords == b.coords) continue;
        const Vec v = log_map(model, a, b);
        double worst = 0.0, worst_t = 0.0;
        for (int k = 1; k < 31; ++k) {
            const double t = k / 31.0;
            const Vec p = exp_ivp(model, TangentVector{a, v}, t).base.coords;
            ++report.checks;
            const double defect = oracle.defect(p);
            if (defect > worst) {
                worst = defect;
                worst_t = t;
            }
        }
        if (worst > kBarycenterTolerance) {
            const Point at = exp_ivp(model, TangentVector{a, v}, worst_t).base;
            report.violations.push_back(Witness{WitnessKind::geodesic, at, {a, b}, {worst}, worst_t});
        }
    }
    return report;
}

}  // namespace hadamard
