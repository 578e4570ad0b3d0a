#pragma once

#include "hadamard/convexity.hpp"

#include <deque>
#include <random>

namespace hadamard {

/// The intersection I = G1 ∩ G2 (∩ H for n = 3) built from a unit vector v and a flow time eps.
struct TheoremScene {
    MetricModel model;
    UnitTangent v;
    double epsilon = 0.0;
    ClosedSetSpec G1;
    ClosedSetSpec G2;
    std::vector<HoroballSpec> auxiliary;
    ClosedSetSpec I;
    Box probe_region;
    int resolution = 0;
    int normal_sign = 1;
};

namespace detail {

// Second spanning vector of the plane through v: the chart axis least aligned with v, made
// orthogonal to it (conformal charts: chart and metric orthogonality agree).
inline Vec plane_partner(const Vec& d) {
    int best = 0;
    for (int i = 1; i < d.size(); ++i)
        if (std::abs(d[i]) < std::abs(d[best])) best = i;
    Vec e = Vec::Zero(d.size());
    e[best] = 1.0;
    e -= e.dot(d) / d.squaredNorm() * d;
    return e.normalized();
}

}  // namespace detail

/// G1 = complement of the open stable horoball of v, G2 = complement of the open unstable
/// horoball of phi_eps(v); for n = 3 one horosphere tangent to span{v, e} is added.
/// eps = 0 is accepted for the flat control (two tangent half-spaces).
inline TheoremScene build_theorem_scene(const MetricModel& model, const Point& base, const Vec& direction, double epsilon,
                                        const Box& region, int resolution, int normal_sign = 1) {
    if (model.dim() > 3) throw DimensionError("theorem scenes support n = 2 and n = 3");
    if (!(epsilon >= 0.0)) throw RangeError("epsilon must be nonnegative");
    if (resolution < 2) throw RangeError("scene resolution must be at least 2");
    model.require_domain(base);
    require_box_in_domain(model, region);
    const UnitTangent v = UnitTangent::from(model, base, direction);
    const UnitTangent flowed = geodesic_flow(model, v, epsilon);
    TheoremScene s{model,
                   v,
                   epsilon,
                   ClosedSetSpec::horoball_complement(stable_horoball(model, v)),
                   ClosedSetSpec::horoball_complement(unstable_horoball(model, flowed)),
                   {},
                   ClosedSetSpec::halfspace(Vec::Zero(model.dim()), 0.0),
                   region,
                   resolution,
                   normal_sign >= 0 ? 1 : -1};
    std::vector<ClosedSetSpec> parts{s.G1, s.G2};
    if (model.dim() == 3) {
        const TangentPlane plane{base, direction, detail::plane_partner(direction)};
        s.auxiliary.push_back(tangent_horosphere(model, plane, s.normal_sign));
        parts.push_back(ClosedSetSpec::horosphere(s.auxiliary.back()));
    }
    s.I = ClosedSetSpec::intersect(std::move(parts));
    return s;
}

enum class ComponentMode {
    interior,   // member cells by centre value; components need a strictly interior cell
    thickened,  // cells the set meets (centre and corners); every component counts
};

inline std::string to_string(ComponentMode m) { return m == ComponentMode::interior ? "interior" : "thickened"; }

struct ComponentReport {
    int count = 0;
    ComponentMode mode = ComponentMode::interior;
    Box region;
    int resolution = 0;
    std::vector<int> labels;  // per cell, 0 .. count-1, or -1 (not a member / dropped)
    std::vector<Point> representatives;  // a cell centre per component (its first cell)
    std::vector<std::size_t> sizes;
    std::size_t member_cells = 0;
    std::size_t interior_cells = 0;
    std::size_t dropped = 0;  // member components without an interior cell (interior mode)
};

namespace detail {

// Does the set (approximately) meet the cell? Leaf-wise test on the centre and corners, combined
// by the set's connectives: a thick leaf needs one point with s <= 0, a thin leaf a sign change.
class CellMeets {
public:
    CellMeets(const SetOracle& oracle, const ClosedSetSpec& set) : oracle_(oracle), set_(set) {}

    bool operator()(const Vec& center, const Vec& step) const {
        const int n = static_cast<int>(center.size());
        const std::size_t nl = oracle_.leaf_count();
        lo_.assign(nl, std::numeric_limits<double>::infinity());
        hi_.assign(nl, -std::numeric_limits<double>::infinity());
        LeafValues lv;
        auto visit = [&](const Vec& p) {
            if (!oracle_.model().in_domain(p)) return;
            oracle_.leaf_values(p, lv);
            for (std::size_t l = 0; l < nl; ++l) {
                lo_[l] = std::min(lo_[l], lv[l]);
                hi_[l] = std::max(hi_[l], lv[l]);
            }
        };
        visit(center);
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec p = center;
            for (int a = 0; a < n; ++a) p[a] += ((mask >> a) & 1 ? 0.5 : -0.5) * step[a];
            visit(p);
        }
        std::size_t next = 0;
        return eval(set_, next);
    }

private:
    bool eval(const ClosedSetSpec& s, std::size_t& next) const {
        switch (s.op()) {
            case ClosedSetSpec::Op::leaf: {
                const std::size_t l = next++;
                if (oracle_.leaf_thin(l)) return lo_[l] <= 0.0 && hi_[l] >= 0.0;
                return lo_[l] <= kBoundaryTolerance;
            }
            case ClosedSetSpec::Op::intersect: {
                bool all = true;
                for (const auto& c : s.args()) all = eval(c, next) && all;
                return all;
            }
            case ClosedSetSpec::Op::unite: {
                bool any = false;
                for (const auto& c : s.args()) any = eval(c, next) || any;
                return any;
            }
        }
        return false;
    }

    const SetOracle& oracle_;
    const ClosedSetSpec& set_;
    mutable std::vector<double> lo_, hi_;
};

inline std::vector<std::array<int, 3>> neighbour_offsets(int n) {
    std::vector<std::array<int, 3>> out;
    const int total = n == 2 ? 9 : 27;
    for (int k = 0; k < total; ++k) {
        std::array<int, 3> o{k % 3 - 1, (k / 3) % 3 - 1, n == 3 ? k / 9 - 1 : 0};
        if (o[0] == 0 && o[1] == 0 && o[2] == 0) continue;
        out.push_back(o);
    }
    return out;
}

}  // namespace detail

/// Components of the set's membership grid over the region (8-neighbour in the plane,
/// 26-neighbour in space). Sets with interior count only components holding a strictly interior
/// cell; when no cell is interior (hypersurfaces, horospheres) the thickened grid is used.
inline ComponentReport connected_components(const MetricModel& model, const ClosedSetSpec& set, const Box& region,
                                            int resolution) {
    require_box_in_domain(model, region);
    if (model.dim() != 2 && model.dim() != 3) throw DimensionError("connected_components supports n = 2 and n = 3");
    const SetOracle oracle(model, set);
    const CellGrid grid(region, resolution);
    const std::size_t cells = grid.size();
    ComponentReport rep;
    rep.region = region;
    rep.resolution = resolution;

    std::vector<char> member(cells, 0), interior(cells, 0);
    if (!oracle.has_thin_leaf()) {
        for (std::size_t c = 0; c < cells; ++c) {
            const double d = oracle.defect(grid.center(c));
            member[c] = d <= kBoundaryTolerance;
            interior[c] = d < -kBoundaryTolerance;
            rep.interior_cells += interior[c] ? 1 : 0;
        }
    }
    if (rep.interior_cells == 0) {
        rep.mode = ComponentMode::thickened;
        const detail::CellMeets meets(oracle, set);
        for (std::size_t c = 0; c < cells; ++c) {
            member[c] = meets(grid.center(c), grid.step());
            interior[c] = member[c];
        }
    }
    for (char m : member) rep.member_cells += m ? 1 : 0;
    if (rep.member_cells == 0) throw EmptySetError("set is empty in the region");

    const int n = model.dim();
    const auto offsets = detail::neighbour_offsets(n);
    std::vector<int> raw(cells, -1);
    std::vector<char> has_interior;
    std::vector<std::size_t> first_cell, sizes;
    std::deque<std::size_t> queue;
    int next = 0;
    for (std::size_t start = 0; start < cells; ++start) {
        if (!member[start] || raw[start] >= 0) continue;
        raw[start] = next;
        queue.push_back(start);
        bool inner = false;
        std::size_t size = 0;
        while (!queue.empty()) {
            const std::size_t c = queue.front();
            queue.pop_front();
            ++size;
            inner = inner || interior[c];
            const auto idx = grid.index(c);
            for (const auto& o : offsets) {
                std::array<int, 3> nb = idx;
                bool inside = true;
                for (int a = 0; a < n; ++a) {
                    nb[static_cast<std::size_t>(a)] += o[static_cast<std::size_t>(a)];
                    if (nb[static_cast<std::size_t>(a)] < 0 || nb[static_cast<std::size_t>(a)] >= resolution) inside = false;
                }
                if (!inside) continue;
                const std::size_t f = grid.flat(nb);
                if (!member[f] || raw[f] >= 0) continue;
                raw[f] = next;
                queue.push_back(f);
            }
        }
        has_interior.push_back(inner);
        first_cell.push_back(start);
        sizes.push_back(size);
        ++next;
    }

    std::vector<int> renumber(static_cast<std::size_t>(next), -1);
    for (int k = 0; k < next; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (!has_interior[ku]) {
            ++rep.dropped;
            continue;
        }
        renumber[ku] = rep.count++;
        rep.representatives.emplace_back(grid.center(first_cell[ku]));
        rep.sizes.push_back(sizes[ku]);
    }
    rep.labels.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) rep.labels[c] = raw[c] < 0 ? -1 : renumber[static_cast<std::size_t>(raw[c])];
    return rep;
}

inline ComponentReport connected_components(const TheoremScene& scene) {
    return connected_components(scene.model, scene.I, scene.probe_region, scene.resolution);
}

/// Two minimisers of d(x, I) that tie.
struct NonUniquenessWitness {
    Point x;
    std::vector<Point> minimizers;
    std::vector<double> distances;
    double separation = 0.0;  // chart distance between the two farthest tied minimisers
    double agreement = 0.0;   // spread of their distances
};

struct WitnessProbe {
    Point x;
    double distance = 0.0;
    std::size_t minimizers = 0;
    double separation = 0.0;
    double agreement = 0.0;
};

struct WitnessSearch {
    std::optional<NonUniquenessWitness> witness;
    std::vector<WitnessProbe> probes;  // margins of every probe tried
};

inline constexpr double kWitnessSeparation = 0.1;
inline constexpr double kWitnessAgreement = 1e-5;

/// Tests one probe: the two tied minimisers (distances within 1e-5) that lie farthest apart.
inline WitnessProbe probe_witness(const SetSampler& sampler, const Point& x, NonUniquenessWitness* out = nullptr) {
    const ProjectionResult r = sampler.query(x);
    WitnessProbe p{x, r.distance, 0, 0.0, 0.0};
    std::vector<const MinimizerCluster*> tied;
    for (const auto& c : r.clusters)
        if (c.local_minimum && !c.on_region_edge && c.distance <= r.distance + kWitnessAgreement) tied.push_back(&c);
    p.minimizers = tied.size();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < tied.size(); ++i)
        for (std::size_t j = i + 1; j < tied.size(); ++j) {
            const double sep = (tied[i]->point.coords - tied[j]->point.coords).norm();
            if (sep > p.separation) {
                p.separation = sep;
                bi = i;
                bj = j;
            }
        }
    if (p.separation > 0.0) {
        p.agreement = std::abs(tied[bi]->distance - tied[bj]->distance);
        if (out) {
            const MinimizerCluster* a = tied[bi];
            const MinimizerCluster* b = tied[bj];
            if (detail::lex_less(b->point.coords, a->point.coords)) std::swap(a, b);
            *out = NonUniquenessWitness{x, {a->point, b->point}, {a->distance, b->distance}, p.separation, p.agreement};
        }
    }
    return p;
}

/// Probes the geodesic of v (the scene's symmetry axis) below the removed horoball's top for a
/// point with two tied, well separated minimisers on I.
inline WitnessSearch nonuniqueness_witness(const TheoremScene& scene) {
    const SetSampler sampler(scene.model, scene.I, SearchSpec{scene.probe_region, scene.resolution});
    WitnessSearch out;
    const double eps = scene.epsilon;
    const std::vector<double> times{0.5 * eps, 0.0, -0.25, -0.5, std::log(0.5), -0.75, -1.0, -1.5};
    for (double t : times) {
        Point x;
        try {
            x = geodesic_flow(scene.model, scene.v, t).base();
        } catch (const ChartExit&) {
            continue;
        }
        if (!scene.probe_region.contains(x.coords) || sampler.contains(x)) continue;
        NonUniquenessWitness w;
        const WitnessProbe p = probe_witness(sampler, x, &w);
        out.probes.push_back(p);
        if (p.separation >= kWitnessSeparation && p.agreement <= kWitnessAgreement) {
            out.witness = std::move(w);
            break;
        }
    }
    return out;
}

/// Flat analog of the construction: I for the given eps, its components, a witness search and a
/// weak-convexity certificate.
struct EuclideanControlReport {
    double epsilon = 0.0;
    bool empty = false;
    int components = 0;
    std::optional<NonUniquenessWitness> witness;
    std::optional<ConvexityCertificate> certificate;
};

inline EuclideanControlReport euclidean_control(double epsilon, int resolution = 64) {
    const MetricModel flat = MetricModel::euclidean(2);
    const Box region = make_box({-2, -2}, {2, 2});
    const TheoremScene scene = build_theorem_scene(flat, Point{0, 0}, make_vec({0, 1}), epsilon, region, resolution);
    EuclideanControlReport rep;
    rep.epsilon = epsilon;
    try {
        rep.components = connected_components(scene).count;
    } catch (const EmptySetError&) {
        rep.empty = true;
        return rep;
    }
    try {
        rep.witness = nonuniqueness_witness(scene).witness;
        rep.certificate = certify_weak_convexity(flat, scene.I, region, resolution);
    } catch (const EmptySetError&) {
        // Thickened cells can bridge a gap thinner than a cell; the sampler sees no member.
        rep.empty = true;
        rep.components = 0;
    }
    return rep;
}

/// Intersection of `count` half-spaces whose boundaries pass through seeded points near the
/// origin, with the origin kept inside.
inline ClosedSetSpec random_halfspaces(int n, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> off(0.2, 1.0);
    std::vector<ClosedSetSpec> parts;
    while (static_cast<int>(parts.size()) < count) {
        Vec a(n);
        for (int i = 0; i < n; ++i) a[i] = gauss(rng);
        if (a.norm() < 1e-6) continue;
        parts.push_back(ClosedSetSpec::halfspace(a.normalized(), off(rng)));
    }
    return ClosedSetSpec::intersect(std::move(parts));
}

}  // namespace hadamard
