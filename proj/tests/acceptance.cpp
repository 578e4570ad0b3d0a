// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Every expected value below comes from formulas written here, not from the library.

#include "hadamard/io.hpp"

#include <chrono>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace hadamard;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- oracles ------------------------------------------------------------------------------

double half_plane_distance(const Vec& z, const Vec& w) {
    const int n = static_cast<int>(z.size());
    return std::acosh(1.0 + (z - w).squaredNorm() / (2.0 * z[n - 1] * w[n - 1]));
}

double disk_distance(const Vec& z, const Vec& w) {
    return std::acosh(1.0 + 2.0 * (z - w).squaredNorm() / ((1.0 - z.squaredNorm()) * (1.0 - w.squaredNorm())));
}

// Busemann function of the ray from p with chart direction d, from the horocycle pictures.
double oracle_busemann(const MetricModel& m, const Vec& p, const Vec& d, const Vec& x) {
    if (m.kind() == MetricKind::euclidean) return -(x - p).dot(d.normalized());
    if (m.kind() == MetricKind::half_space) {
        // Geodesic through p with velocity d: semicircle centred on the real axis.
        const double c = p[0] + p[1] * d[1] / d[0];
        const double r = std::hypot(p[0] - c, p[1]);
        const double a = c + (d[0] > 0 ? r : -r);
        auto f = [&](const Vec& z) { return -std::log(z[1] / ((z[0] - a) * (z[0] - a) + z[1] * z[1])); };
        return f(x) - f(p);
    }
    // Disk: move p to 0 with a Moebius map, whose derivative at p is a positive real.
    using C = std::complex<double>;
    const C pc(p[0], p[1]);
    const C xi0 = C(d[0], d[1]) / std::abs(C(d[0], d[1]));
    const C xi = (xi0 + pc) / (1.0 + std::conj(pc) * xi0);
    auto f = [&](const Vec& z) { return std::log(std::norm(xi - C(z[0], z[1])) / (1.0 - z.squaredNorm())); };
    return f(x) - f(p);
}

// K = -e^{-2 phi} Lap(phi) in the plane, with phi and its laplacian written out per catalog id.
double oracle_conformal_curvature(ConformalField f, const Vec& x) {
    const double r2 = x.squaredNorm();
    double phi = 0.0, lap = 0.0;
    switch (f) {
        case ConformalField::zero: break;
        case ConformalField::quadratic: phi = r2; lap = 4.0; break;
        case ConformalField::log_radial: phi = 0.5 * std::log1p(r2); lap = 2.0 / ((1.0 + r2) * (1.0 + r2)); break;
        case ConformalField::neg_x_squared: phi = -x[0] * x[0]; lap = -2.0; break;
        case ConformalField::radial_bump: phi = std::exp(-r2); lap = (4.0 * r2 - 4.0) * std::exp(-r2); break;
    }
    return -std::exp(-2.0 * phi) * lap;
}

Vec random_point(const MetricModel& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec p(m.dim());
    for (int i = 0; i < m.dim(); ++i) p[i] = u(rng);
    if (m.kind() == MetricKind::half_space) p[m.dim() - 1] = std::exp(1.2 * p[m.dim() - 1]);
    if (m.kind() == MetricKind::ball) p *= 0.85 / std::sqrt(static_cast<double>(m.dim()));
    return p;
}

// ---- criteria -----------------------------------------------------------------------------

Outcome geodesy_suite() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    double worst_d = 0.0, worst_rt = 0.0;
    int pairs = 0;
    for (const auto& m : {MetricModel::half_space(2), MetricModel::ball(2), MetricModel::half_space(3), MetricModel::ball(3)}) {
        int done = 0;
        while (done < 125) {
            const Point x(random_point(m, rng)), y(random_point(m, rng));
            const double oracle = m.kind() == MetricKind::ball ? disk_distance(x.coords, y.coords)
                                                               : half_plane_distance(x.coords, y.coords);
            if (oracle > 5.0 || oracle < 1e-6) continue;
            // Shooting length (integrated) and the exp(log) round trip.
            worst_d = std::max(worst_d, std::abs(connect_bvp(m, x, y).length - oracle));
            worst_d = std::max(worst_d, std::abs(distance(m, x, y) - oracle));
            const Point back = exp_ivp(m, TangentVector{x, log_map(m, x, y)}, 1.0).base;
            worst_rt = std::max(worst_rt, (back.coords - y.coords).norm());
            ++done;
            ++pairs;
        }
    }
    const double secs = seconds_since(t0);
    return {worst_d <= 1e-6 && worst_rt <= 1e-6 && secs < 60.0,
            std::to_string(pairs) + " pairs, worst |d - oracle| " + fmt("%.2e", worst_d) + ", worst exp(log) error " +
                fmt("%.2e", worst_rt) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome busemann_suite() {
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> nd;
    double worst = 0.0, worst_decay = 0.0;
    bool converged = true;
    for (const auto& m : {MetricModel::half_space(2), MetricModel::ball(2), MetricModel::euclidean(2)}) {
        const Vec p = m.kind() == MetricKind::half_space ? make_vec({0.2, 1.1}) : make_vec({0.1, -0.25});
        const Vec d = make_vec({nd(rng), nd(rng)});
        BusemannFunctional f{UnitTangent::from(m, Point(p), d), BusemannMode::numeric};
        const BusemannEvaluator eval(m, f);
        int checked = 0;
        while (checked < 500) {
            Vec x = make_vec({2.0 * u(rng), 2.0 * u(rng)});
            if (m.kind() == MetricKind::half_space) x[1] = std::exp(1.5 * u(rng));
            if (m.kind() == MetricKind::ball) x *= 0.45;
            if (!m.in_domain(x)) continue;
            const BusemannValue v = eval(Point(x));
            converged = converged && v.converged;
            worst = std::max(worst, std::abs(v.value - oracle_busemann(m, p, d, x)));
            ++checked;
        }
        for (double s : {0.5, 1.0, 2.0, 4.0}) {
            const Point q = exp_ivp(m, f.direction.vector(), s).base;
            worst_decay = std::max(worst_decay, std::abs(eval.value(q) + s));
        }
    }
    return {converged && worst <= 1e-4 && worst_decay <= 1e-6,
            "1500 points, worst |numeric - oracle| " + fmt("%.2e", worst) + ", worst |B(ray(s)) + s| " + fmt("%.2e", worst_decay)};
}

Outcome curvature_suite() {
    double flat = 0.0, hyp = 0.0, conf = 0.0;
    std::mt19937_64 rng(3003);
    for (int k = 0; k < 200; ++k) {
        const Vec a = make_vec({std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)});
        const Vec b = make_vec({std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)});
        for (const auto& m : {MetricModel::euclidean(3), MetricModel::half_space(3), MetricModel::ball(3)}) {
            const Point p(random_point(m, rng));
            const double K = sectional_curvature(m, TangentPlane{p, a, b});
            if (m.kind() == MetricKind::euclidean) flat = std::max(flat, std::abs(K));
            else hyp = std::max(hyp, std::abs(K + 1.0));
        }
        for (const auto& m : {MetricModel::half_space(2), MetricModel::ball(2)}) {
            const Point p(random_point(m, rng));
            hyp = std::max(hyp, std::abs(sectional_curvature(m, TangentPlane{p, make_vec({1, 0}), make_vec({0, 1})}) + 1.0));
        }
    }
    for (ConformalField f : {ConformalField::quadratic, ConformalField::log_radial, ConformalField::neg_x_squared, ConformalField::radial_bump}) {
        const MetricModel m = MetricModel::conformal(2, f);
        for (int k = 0; k < 50; ++k) {
            const Vec x = random_point(MetricModel::euclidean(2), rng);
            const double K = sectional_curvature(m, TangentPlane{Point(x), make_vec({1, 0}), make_vec({0.3, 1})});
            conf = std::max(conf, std::abs(K - oracle_conformal_curvature(f, x)));
        }
    }
    const bool rejected = !verify_curvature_bounds(MetricModel::conformal(2, ConformalField::neg_x_squared), make_box({-1, -1}, {1, 1}), 9).all_in_bounds;
    const bool accepted = verify_curvature_bounds(MetricModel::conformal(2, ConformalField::log_radial), make_box({-2, -2}, {2, 2}), 9).all_in_bounds;
    return {flat <= 1e-9 && hyp <= 1e-6 && conf <= 1e-6 && rejected && accepted,
            "max |K| flat " + fmt("%.1e", flat) + ", max |K + 1| hyperbolic " + fmt("%.1e", hyp) + ", max catalog error " +
                fmt("%.1e", conf) + ", positive entry rejected: " + (rejected ? "yes" : "no")};
}

struct LemmaScene {
    std::string name;
    MetricModel model;
    ClosedSetSpec set;
    Box region;  // search region
    Box inner;   // boundary points are drawn from here
};

std::vector<LemmaScene> lemma_scenes() {
    const auto flat = MetricModel::euclidean(2);
    const auto hp = MetricModel::half_space(2);
    return {
        {"euclidean half-space", flat, ClosedSetSpec::halfspace(make_vec({0.6, 0.8}), 0.2), make_box({-3, -3}, {3, 3}),
         make_box({-1.5, -1.5}, {1.5, 1.5})},
        {"euclidean ball", flat, ClosedSetSpec::ball(Point{0.2, -0.1}, 1.0), make_box({-3, -3}, {3, 3}), make_box({-2, -2}, {2, 2})},
        {"hyperbolic horoball complement", hp,
         ClosedSetSpec::horoball_complement(stable_horoball(hp, UnitTangent::from(hp, Point{0, 1}, make_vec({0, 1})))),
         make_box({-3, 0.1}, {3, 4}), make_box({-1.5, 0.5}, {1.5, 2})},
    };
}

Outcome lemma_suite() {
    std::mt19937_64 rng(4004);
    double worst_ratio = 0.0, worst_excess = -1.0;
    bool identities = true;
    std::size_t probes = 0;
    for (const LemmaScene& sc : lemma_scenes()) {
        const SetSampler s(sc.model, sc.set, SearchSpec{sc.region, 128});
        // Homotopy identities on random points.
        std::uniform_real_distribution<double> ux(sc.inner.min[0], sc.inner.max[0]), uy(sc.inner.min[1], sc.inner.max[1]);
        for (int k = 0; k < 40; ++k) {
            const Point x{ux(rng), uy(rng)};
            if (homotopy_H(s, x, 0.0).coords != x.coords) identities = false;
            const Point end = homotopy_H(s, x, 1.0);
            if (!s.contains(end) || end.coords != retraction_P(s, x).coords) identities = false;
            if (s.contains(x))
                for (double t : {0.25, 0.5, 1.0})
                    if (homotopy_H(s, x, t).coords != x.coords) identities = false;
        }
        std::vector<Point> boundary;
        for (const Point& p : s.boundary_points())
            if (sc.inner.contains(p.coords) && std::abs(s.oracle().defect(p.coords)) <= kBoundaryTolerance) boundary.push_back(p);
        std::shuffle(boundary.begin(), boundary.end(), rng);
        boundary.resize(std::min<std::size_t>(boundary.size(), 50));
        if (boundary.size() < 50) identities = false;
        for (double eps : {0.2, 0.1, 0.05}) {
            for (const Point& x : boundary) {
                const ContinuityReport r = continuity_probe(s, x, eps, 20, rng());
                ++probes;
                worst_excess = std::max(worst_excess, r.max_displacement - (2.0 * eps + 1e-5));
                worst_ratio = std::max(worst_ratio, r.max_displacement / eps);
            }
        }
    }
    return {identities && worst_excess < 0.0,
            std::to_string(probes) + " continuity probes, worst d(P(y), P(x)) / eps " + fmt("%.3f", worst_ratio) +
                " (bound 2), homotopy identities " + (identities ? "hold" : "FAIL")};
}

Outcome separation_suite() {
    const auto t0 = Clock::now();
    const auto hp = MetricModel::half_space(2);
    const ClosedSetSpec g =
        ClosedSetSpec::horoball_complement(stable_horoball(hp, UnitTangent::from(hp, Point{0, 1}, make_vec({0, 1}))));
    const Box region = make_box({-2, 0.1}, {2, 3});
    const SetSampler s(hp, g, SearchSpec{region, 256});
    const ConvexityCertificate cert = certify_weak_convexity(s, 256);
    const GeodesicConvexityReport geo = check_geodesic_convexity(hp, g, sample_member_pairs(s, 200, 5005));
    return {cert.verdict == hadamard::Verdict::consistent_at_resolution && cert.violations == 0 && !geo.convex(),
            "weak convexity at 256: " + to_string(cert.verdict) + " (" + std::to_string(cert.probes) + " probes, " +
                std::to_string(cert.violations) + " witnesses); geodesic convexity: " + std::to_string(geo.violations.size()) +
                " violating pairs of " + std::to_string(geo.pairs) + ", " + fmt("%.0f", seconds_since(t0)) + " s"};
}

Outcome theorem_suite() {
    const auto hp = MetricModel::half_space(2);
    const Box strip = make_box({-2, 0.02}, {2, 1.2});
    bool ok = true;
    std::string detail;
    for (double eps : {0.1, 0.3, 0.5}) {
        const TheoremScene s512 = build_theorem_scene(hp, Point{0, 1}, make_vec({0, 1}), eps, strip, 512);
        const TheoremScene s1024 = build_theorem_scene(hp, Point{0, 1}, make_vec({0, 1}), eps, strip, 1024);
        const ComponentReport c512 = connected_components(s512), c1024 = connected_components(s1024);
        const WitnessSearch ws = nonuniqueness_witness(s512);
        bool witness_ok = false;
        if (ws.witness) {
            const NonUniquenessWitness& w = *ws.witness;
            const SetOracle I(hp, s512.I);
            witness_ok = w.separation >= 0.1 && w.agreement <= 1e-5 && w.minimizers.size() >= 2 &&
                         I.contains(w.minimizers[0].coords) && I.contains(w.minimizers[1].coords) &&
                         std::abs(half_plane_distance(w.x.coords, w.minimizers[0].coords) -
                                  half_plane_distance(w.x.coords, w.minimizers[1].coords)) <= 1e-5;
        }
        const bool g1 = certify_weak_convexity(hp, s512.G1, strip, 64).verdict == hadamard::Verdict::consistent_at_resolution;
        const bool g2 = certify_weak_convexity(hp, s512.G2, strip, 64).verdict == hadamard::Verdict::consistent_at_resolution;
        const bool here = c512.count == 2 && c1024.count == 2 && c512.interior_cells >= 100 && witness_ok && g1 && g2;
        ok = ok && here;
        detail += "eps " + fmt("%.1f", eps) + ": components " + std::to_string(c512.count) + "/" + std::to_string(c1024.count) +
                  ", witness " + (witness_ok ? fmt("sep %.3f", ws.witness->separation) : std::string("none")) +
                  ", G1 " + (g1 ? "ok" : "violated") + ", G2 " + (g2 ? "ok" : "violated") + "; ";
    }
    const EuclideanControlReport ctrl = euclidean_control(0.0, 64);
    const bool ctrl_ok = !ctrl.empty && ctrl.components == 1 && !ctrl.witness && ctrl.certificate &&
                         ctrl.certificate->verdict == hadamard::Verdict::consistent_at_resolution;
    int halfspace_ok = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto cert = certify_weak_convexity(MetricModel::euclidean(2), random_halfspaces(2, 4, seed), make_box({-2, -2}, {2, 2}), 32);
        halfspace_ok += cert.verdict == hadamard::Verdict::consistent_at_resolution ? 1 : 0;
    }
    ok = ok && ctrl_ok && halfspace_ok == 5;
    detail += std::string("euclidean control ") + (ctrl_ok ? "1 component, no witness" : "FAIL") + ", half-space intersections " +
              std::to_string(halfspace_ok) + "/5 certified";
    return {ok, detail};
}

Outcome motzkin_suite() {
    std::mt19937_64 rng(7007);
    double lo = 2.0, hi = 0.0;
    int probes = 0;
    for (const LemmaScene& sc : lemma_scenes()) {
        const SetSampler s(sc.model, sc.set, SearchSpec{sc.region, 128});
        std::uniform_real_distribution<double> ux(sc.inner.min[0], sc.inner.max[0]), uy(sc.inner.min[1], sc.inner.max[1]);
        int here = 0;
        while (here < 67) {
            const Point x{ux(rng), uy(rng)};
            const ProjectionResult r = s.query(x);
            if (r.distance < 0.05 || r.region_edge) continue;
            const double norm = motzkin_gradient_norm(s, x, r);
            lo = std::min(lo, norm);
            hi = std::max(hi, norm);
            ++here;
            ++probes;
        }
    }
    const auto flat = MetricModel::euclidean(2);
    const ClosedSetSpec two = ClosedSetSpec::unite({ClosedSetSpec::ball(Point{-1, 0}, 0.3), ClosedSetSpec::ball(Point{1, 0}, 0.3)});
    const SetSampler s2(flat, two, SearchSpec{make_box({-2, -2}, {2, 2}), 128});
    const double axis = motzkin_gradient_norm(s2, Point{0, 0.5});
    const bool kink = std::abs(axis - 1.0) > kKinkThreshold;
    return {lo >= 0.999 && hi <= 1.001 && probes >= 200 && kink,
            std::to_string(probes) + " probes, gradient norm in [" + fmt("%.5f", lo) + ", " + fmt("%.5f", hi) +
                "], two-ball axis norm " + fmt("%.3f", axis) + (kink ? " (kink flagged)" : " (no kink)")};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism_suite() {
    const std::string cli = HADAMARD_CLI_PATH;
    const std::string dir = HADAMARD_SCENES_DIR;
    int identical = 0, runs = 0;
    for (const char* scene : {"counterexample_hyperbolic.json", "retract_half_plane.json", "certify_two_balls.json", "busemann_half_plane.json"}) {
        std::string outs[2];
        for (int k = 0; k < 2; ++k) {
            const std::string out = "determinism_" + std::to_string(k) + ".json";
            const std::string cmd = cli + " --scene " + dir + "/" + scene + " --seed 42 --out " + out + " > /dev/null 2>&1";
            [[maybe_unused]] const int rc = std::system(cmd.c_str());
            outs[k] = slurp(out);
        }
        ++runs;
        if (!outs[0].empty() && outs[0] == outs[1]) ++identical;
    }
    return {identical == runs, std::to_string(identical) + "/" + std::to_string(runs) + " scenes byte-identical across two runs"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"geodesy oracle suite", geodesy_suite},
        {"Busemann oracle suite", busemann_suite},
        {"curvature suite", curvature_suite},
        {"deformation retraction suite", lemma_suite},
        {"weak vs geodesic convexity", separation_suite},
        {"intersection counterexample suite", theorem_suite},
        {"distance gradient suite", motzkin_suite},
        {"CLI determinism", determinism_suite},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
