#pragma once

#include "hadamard/geodesy.hpp"
#include "hadamard/horo.hpp"

#include <boost/container/small_vector.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <memory>
#include <variant>

namespace hadamard {

inline constexpr double kBoundaryTolerance = 1e-9;  // delta_boundary
inline constexpr double kProjectionTolerance = 1e-6;  // tol_proj
inline constexpr double kMinSeparation = 1e-3;  // sep_min

// ---------------------------------------------------------------------------------------------
// Primitives

/// Closed geodesic ball.
struct BallLeaf {
    Point center;
    double radius = 0.0;
};

/// Chart half-space a.x <= b.
struct HalfspaceLeaf {
    Vec a;
    double b = 0.0;
};

/// Pieces of a horoball: the closed ball {B <= level}, the complement of the open ball
/// {B >= level}, or the horosphere {B = level}.
struct HoroLeaf {
    enum class Part { closed_ball, complement, sphere };
    HoroballSpec spec;
    Part part = Part::complement;
};

enum class SublevelField {
    circle,     // | |x - c| - r | <= 0 (a round sphere in the chart, no interior)
    ellipsoid,  // sum ((x - c)_i / s_i)^2 - 1 <= 0
};

struct SublevelLeaf {
    SublevelField field = SublevelField::circle;
    Vec center;
    Vec semi_axes;  // ellipsoid only
    double radius = 1.0;  // circle only
};

using Leaf = std::variant<BallLeaf, HalfspaceLeaf, HoroLeaf, SublevelLeaf>;

/// Closed subset G of M: primitives combined by finite intersections and unions.
class ClosedSetSpec {
public:
    enum class Op { leaf, intersect, unite };

    static ClosedSetSpec ball(Point center, double radius) { return ClosedSetSpec(BallLeaf{std::move(center), radius}); }
    static ClosedSetSpec halfspace(Vec a, double b) { return ClosedSetSpec(HalfspaceLeaf{std::move(a), b}); }
    static ClosedSetSpec horoball_complement(HoroballSpec h) { return ClosedSetSpec(HoroLeaf{std::move(h), HoroLeaf::Part::complement}); }
    static ClosedSetSpec closed_horoball(HoroballSpec h) { return ClosedSetSpec(HoroLeaf{std::move(h), HoroLeaf::Part::closed_ball}); }
    static ClosedSetSpec horosphere(HoroballSpec h) { return ClosedSetSpec(HoroLeaf{std::move(h), HoroLeaf::Part::sphere}); }
    static ClosedSetSpec circle(Vec center, double radius) {
        return ClosedSetSpec(SublevelLeaf{SublevelField::circle, std::move(center), Vec(), radius});
    }
    static ClosedSetSpec ellipsoid(Vec center, Vec semi_axes) {
        return ClosedSetSpec(SublevelLeaf{SublevelField::ellipsoid, std::move(center), std::move(semi_axes), 1.0});
    }
    static ClosedSetSpec intersect(std::vector<ClosedSetSpec> args) { return ClosedSetSpec(Op::intersect, std::move(args)); }
    static ClosedSetSpec unite(std::vector<ClosedSetSpec> args) { return ClosedSetSpec(Op::unite, std::move(args)); }

    Op op() const { return op_; }
    const Leaf& leaf() const { return *leaf_; }
    const std::vector<ClosedSetSpec>& args() const { return args_; }

private:
    explicit ClosedSetSpec(Leaf leaf) : op_(Op::leaf), leaf_(std::make_shared<const Leaf>(std::move(leaf))) {}
    ClosedSetSpec(Op op, std::vector<ClosedSetSpec> args) : op_(op), args_(std::move(args)) {
        if (args_.empty()) throw SchemaError("set connectives need at least one argument");
    }

    Op op_;
    std::shared_ptr<const Leaf> leaf_;
    std::vector<ClosedSetSpec> args_;
};

using LeafValues = boost::container::small_vector<double, 8>;

/// Compiled membership oracle for a ClosedSetSpec on a fixed model.
///
/// Every leaf exposes a signed function s (negative inside). Thick leaves are the sublevel
/// {s <= 0}; thin leaves (horospheres, circles) are the level set {s = 0} and contribute |s|.
class SetOracle {
public:
    SetOracle(const MetricModel& model, const ClosedSetSpec& set) : model_(model) { root_ = compile(set); }

    const MetricModel& model() const { return model_; }
    std::size_t leaf_count() const { return leaves_.size(); }
    bool leaf_thin(std::size_t i) const { return leaves_[i].thin; }
    bool has_thin_leaf() const {
        return std::any_of(leaves_.begin(), leaves_.end(), [](const CompiledLeaf& l) { return l.thin; });
    }
    /// Largest Cauchy gap reported by numeric Busemann evaluations so far (0 for closed forms).
    double busemann_gap() const { return busemann_gap_; }

    void leaf_values(const Vec& x, LeafValues& out) const {
        out.resize(leaves_.size());
        for (std::size_t i = 0; i < leaves_.size(); ++i) out[i] = leaf_value(i, x);
    }

    double leaf_value(std::size_t i, const Vec& x) const {
        const CompiledLeaf& l = leaves_[i];
        return std::visit(
            [&](const auto& leaf) -> double {
                using T = std::decay_t<decltype(leaf)>;
                if constexpr (std::is_same_v<T, BallLeaf>) {
                    return distance(model_, leaf.center, Point(x)) - leaf.radius;
                } else if constexpr (std::is_same_v<T, HalfspaceLeaf>) {
                    return leaf.a.dot(x) - leaf.b;
                } else if constexpr (std::is_same_v<T, HoroLeaf>) {
                    const BusemannValue bv = (*l.busemann)(Point(x));
                    if (!bv.converged || bv.gap > 0.0) busemann_gap_ = std::max(busemann_gap_, bv.gap);
                    const double s = bv.value - leaf.spec.level;
                    return leaf.part == HoroLeaf::Part::complement ? -s : s;
                } else {
                    if (leaf.field == SublevelField::circle) return (x - leaf.center).norm() - leaf.radius;
                    return (x - leaf.center).cwiseQuotient(leaf.semi_axes).squaredNorm() - 1.0;
                }
            },
            l.leaf);
    }

    /// Membership defect: <= 0 inside (up to the boundary tolerance), > 0 outside.
    double defect(const LeafValues& values) const { return combine(root_, values); }

    double defect(const Vec& x) const {
        LeafValues v;
        leaf_values(x, v);
        return defect(v);
    }

    bool contains(const Vec& x) const { return defect(x) <= kBoundaryTolerance; }

private:
    struct CompiledLeaf {
        Leaf leaf;
        bool thin = false;
        std::shared_ptr<const BusemannEvaluator> busemann;
    };
    struct Node {
        ClosedSetSpec::Op op;
        std::size_t leaf = 0;
        std::vector<Node> children;
    };

    Node compile(const ClosedSetSpec& s) {
        Node node{s.op(), 0, {}};
        if (s.op() == ClosedSetSpec::Op::leaf) {
            CompiledLeaf cl{s.leaf(), false, nullptr};
            std::visit(
                [&](const auto& leaf) {
                    using T = std::decay_t<decltype(leaf)>;
                    if constexpr (std::is_same_v<T, BallLeaf>) {
                        model_.require_domain(leaf.center);
                        if (!(leaf.radius >= 0.0)) throw SchemaError("ball radius must be nonnegative");
                    } else if constexpr (std::is_same_v<T, HalfspaceLeaf>) {
                        if (leaf.a.size() != model_.dim()) throw DimensionError("half-space normal has the wrong dimension");
                    } else if constexpr (std::is_same_v<T, HoroLeaf>) {
                        cl.thin = leaf.part == HoroLeaf::Part::sphere;
                        cl.busemann = std::make_shared<const BusemannEvaluator>(model_, leaf.spec.functional);
                    } else {
                        if (leaf.center.size() != model_.dim()) throw DimensionError("sublevel centre has the wrong dimension");
                        cl.thin = leaf.field == SublevelField::circle;
                        if (leaf.field == SublevelField::ellipsoid &&
                            (leaf.semi_axes.size() != model_.dim() || !(leaf.semi_axes.minCoeff() > 0.0)))
                            throw SchemaError("ellipsoid semi-axes must be positive");
                    }
                },
                s.leaf());
            node.leaf = leaves_.size();
            leaves_.push_back(std::move(cl));
            return node;
        }
        for (const auto& a : s.args()) node.children.push_back(compile(a));
        return node;
    }

    double combine(const Node& node, const LeafValues& values) const {
        switch (node.op) {
            case ClosedSetSpec::Op::leaf: {
                const double s = values[node.leaf];
                return leaves_[node.leaf].thin ? std::abs(s) : s;
            }
            case ClosedSetSpec::Op::intersect: {
                double m = -std::numeric_limits<double>::infinity();
                for (const auto& c : node.children) m = std::max(m, combine(c, values));
                return m;
            }
            case ClosedSetSpec::Op::unite: {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& c : node.children) m = std::min(m, combine(c, values));
                return m;
            }
        }
        return 0.0;
    }

    MetricModel model_;
    std::vector<CompiledLeaf> leaves_;
    Node root_;
    mutable double busemann_gap_ = 0.0;
};

/// Membership test with the boundary tolerance applied at the leaves.
inline bool contains(const MetricModel& model, const ClosedSetSpec& set, const Point& x) {
    model.require_domain(x);
    return SetOracle(model, set).contains(x.coords);
}

// ---------------------------------------------------------------------------------------------
// Grids

/// Cell-centred grid over a box with `resolution` cells per axis.
class CellGrid {
public:
    CellGrid(Box region, int resolution) : region_(std::move(region)), res_(resolution) {
        if (resolution < 1) throw RangeError("grid resolution must be positive");
        n_ = region_.dim();
        step_ = region_.extent() / resolution;
        count_ = 1;
        for (int i = 0; i < n_; ++i) count_ *= static_cast<std::size_t>(resolution);
    }

    int dim() const { return n_; }
    int resolution() const { return res_; }
    std::size_t size() const { return count_; }
    const Box& region() const { return region_; }
    const Vec& step() const { return step_; }
    double diagonal() const { return step_.norm(); }

    std::array<int, 3> index(std::size_t flat) const {
        std::array<int, 3> idx{};
        for (int a = 0; a < n_; ++a) {
            idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(res_));
            flat /= static_cast<std::size_t>(res_);
        }
        return idx;
    }

    std::size_t flat(const std::array<int, 3>& idx) const {
        std::size_t f = 0;
        for (int a = n_ - 1; a >= 0; --a) f = f * static_cast<std::size_t>(res_) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        return f;
    }

    Vec center(std::size_t flat_index) const {
        const auto idx = index(flat_index);
        Vec p(n_);
        for (int a = 0; a < n_; ++a) p[a] = region_.min[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * step_[a];
        return p;
    }

private:
    Box region_;
    int res_;
    int n_ = 0;
    Vec step_;
    std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------------------------
// Projection

struct SearchSpec {
    Box region;
    int resolution = 128;
    int refine_iters = 60;
};

struct MinimizerCluster {
    Point point;
    double distance = 0.0;
    bool on_region_edge = false;
    bool local_minimum = true;  // false when refinement stopped at the edge of its search window
};

/// Result of a distance-to-set query.
struct ProjectionResult {
    double distance = 0.0;
    std::vector<Point> minimizers;  // lexicographic chart order
    bool unique = true;
    std::vector<MinimizerCluster> clusters;  // every distinct local minimiser, by distance
    bool region_edge = false;  // the best minimiser lies on the search region's boundary
    bool degraded = false;     // refinement failed for some start; best grid value reported
};

/// The projection was requested where it is not single valued.
class NonUniqueProjection : public Error {
public:
    NonUniqueProjection(Point probe, ProjectionResult r)
        : Error("projection is not unique"), probe_(std::move(probe)), result_(std::move(r)) {}
    const Point& probe() const { return probe_; }
    const ProjectionResult& result() const { return result_; }

private:
    Point probe_;
    ProjectionResult result_;
};

namespace detail {

inline bool lex_less(const Vec& a, const Vec& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

/// Small Nelder-Mead minimiser for the two-parameter direction search in dimension 3.
template <class F>
std::pair<Eigen::Vector2d, double> nelder_mead_2d(F f, Eigen::Vector2d start, double size, int max_iter, double xtol) {
    std::array<Eigen::Vector2d, 3> s{start, start + Eigen::Vector2d(size, 0), start + Eigen::Vector2d(0, size)};
    std::array<double, 3> fv{f(s[0]), f(s[1]), f(s[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return fv[static_cast<std::size_t>(a)] < fv[static_cast<std::size_t>(b)]; });
        const auto b = static_cast<std::size_t>(o[0]), m = static_cast<std::size_t>(o[1]), w = static_cast<std::size_t>(o[2]);
        if ((s[w] - s[b]).norm() < xtol && (s[m] - s[b]).norm() < xtol) break;
        const Eigen::Vector2d c = 0.5 * (s[b] + s[m]);
        const Eigen::Vector2d r = c + (c - s[w]);
        const double fr = f(r);
        if (fr < fv[b]) {
            const Eigen::Vector2d e = c + 2.0 * (c - s[w]);
            const double fe = f(e);
            if (fe < fr) { s[w] = e; fv[w] = fe; } else { s[w] = r; fv[w] = fr; }
        } else if (fr < fv[m]) {
            s[w] = r;
            fv[w] = fr;
        } else {
            const Eigen::Vector2d k = c + 0.5 * (s[w] - c);
            const double fk = f(k);
            if (fk < fv[w]) {
                s[w] = k;
                fv[w] = fk;
            } else {
                for (auto i : {m, w}) {
                    s[i] = s[b] + 0.5 * (s[i] - s[b]);
                    fv[i] = f(s[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (fv[i] < fv[best]) best = i;
    return {s[best], fv[best]};
}

}  // namespace detail

/// A boundary sample of G intersected with the search region.
struct BoundaryPoint {
    Point point;
    bool on_region_face = false;
};

/// Grid scan of a set over a search region, reused across many projection queries.
///
/// Candidates are (a) zero crossings of each leaf's signed function along grid edges, bisected
/// and kept when they belong to G, and (b) member cells on the outer layer moved onto the region
/// face. Every point of G's relative boundary inside the region is within one cell of one.
class SetSampler {
public:
    SetSampler(const MetricModel& model, const ClosedSetSpec& set, SearchSpec search)
        : oracle_(model, set), search_(std::move(search)), grid_(search_.region, search_.resolution) {
        require_box_in_domain(model, search_.region);
        if (search_.resolution < 2) throw RangeError("search resolution must be at least 2");
        scan();
    }

    const SetOracle& oracle() const { return oracle_; }
    const MetricModel& model() const { return oracle_.model(); }
    const SearchSpec& search() const { return search_; }
    const CellGrid& grid() const { return grid_; }
    const std::vector<BoundaryPoint>& candidates() const { return candidates_; }
    std::size_t member_cells() const { return member_cells_; }

    bool contains(const Point& x) const { return oracle_.contains(x.coords); }

    double region_defect(const Vec& x) const {
        const Box& r = search_.region;
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < x.size(); ++i) m = std::max({m, r.min[i] - x[i], x[i] - r.max[i]});
        return m;
    }

    /// Distance from x to G within the region, with every distinct minimiser.
    ProjectionResult query(const Point& x) const {
        const MetricModel& model = this->model();
        model.require_domain(x);
        ProjectionResult out;
        if (oracle_.contains(x.coords)) {
            out.distance = 0.0;
            out.minimizers = {x};
            out.clusters = {{x, 0.0, region_defect(x.coords) >= -1e-12}};
            return out;
        }
        const double diag = grid_.diagonal();
        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(candidates_.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates_.size(); ++i) {
            const double d = distance(model, x, candidates_[i].point);
            scored.emplace_back(d, i);
            best = std::min(best, d);
        }
        std::vector<std::pair<double, std::size_t>> near;
        for (const auto& [d, i] : scored) {
            const Vec& c = candidates_[i].point.coords;
            if (d <= best + model.scale(c) * diag) near.emplace_back(d, i);
        }
        std::sort(near.begin(), near.end());
        std::vector<std::size_t> seeds;
        for (const auto& [d, i] : near) {
            bool separate = true;
            for (std::size_t s : seeds)
                if ((candidates_[s].point.coords - candidates_[i].point.coords).norm() <= 1.5 * diag) separate = false;
            if (separate) seeds.push_back(i);
            if (seeds.size() >= 12) break;
        }

        std::vector<Start> starts;
        for (std::size_t s : seeds) starts.push_back({candidates_[s].point, scored[s].first, candidates_[s].on_region_face});
        return finish(x, starts);
    }

    /// Warm-started query: refines only from the given members of G (e.g. minimisers of a nearby
    /// query), skipping the candidate scan.
    ProjectionResult query_from(const Point& x, const std::vector<Point>& seeds) const {
        model().require_domain(x);
        if (oracle_.contains(x.coords) || seeds.empty()) return query(x);
        std::vector<Start> starts;
        for (const Point& p : seeds) starts.push_back({p, distance(model(), x, p), region_defect(p.coords) >= -1e-12});
        return finish(x, starts);
    }

    /// Boundary samples of G strictly inside the region (region faces excluded).
    std::vector<Point> boundary_points() const {
        std::vector<Point> pts;
        for (const auto& c : candidates_)
            if (!c.on_region_face) pts.push_back(c.point);
        return pts;
    }

private:
    struct Start {
        Point point;
        double distance;
        bool on_face;
    };

    ProjectionResult finish(const Point& x, const std::vector<Start>& starts) const {
        ProjectionResult out;
        std::vector<MinimizerCluster> refined;
        for (const Start& seed : starts) {
            MinimizerCluster m = refine(x, seed.point, seed.distance);
            if (m.distance > seed.distance) {
                m = {seed.point, seed.distance, seed.on_face};
                out.degraded = true;
            }
            refined.push_back(std::move(m));
        }
        std::sort(refined.begin(), refined.end(),
                  [](const MinimizerCluster& a, const MinimizerCluster& b) { return a.distance < b.distance; });
        const double best_refined = refined.front().distance;
        for (auto& m : refined) {
            // A start stopped by its window is not a distinct minimiser unless it ties the best.
            if (!m.local_minimum && m.distance > best_refined + kProjectionTolerance) continue;
            bool merged = false;
            for (const auto& c : out.clusters)
                if ((c.point.coords - m.point.coords).norm() <= kMinSeparation) merged = true;
            if (!merged) out.clusters.push_back(std::move(m));
        }
        out.distance = out.clusters.front().distance;
        out.region_edge = out.clusters.front().on_region_edge;
        for (const auto& c : out.clusters)
            if (c.distance <= out.distance + kProjectionTolerance) out.minimizers.push_back(c.point);
        std::sort(out.minimizers.begin(), out.minimizers.end(),
                  [](const Point& a, const Point& b) { return detail::lex_less(a.coords, b.coords); });
        out.unique = out.minimizers.size() == 1;
        return out;
    }

    void scan() {
        const std::size_t cells = grid_.size();
        const std::size_t nl = oracle_.leaf_count();
        const int n = grid_.dim();
        std::vector<double> values(cells * nl);
        std::vector<char> member(cells);
        LeafValues lv;
        for (std::size_t c = 0; c < cells; ++c) {
            oracle_.leaf_values(grid_.center(c), lv);
            std::copy(lv.begin(), lv.end(), values.begin() + static_cast<std::ptrdiff_t>(c * nl));
            member[c] = oracle_.defect(lv) <= kBoundaryTolerance;
            member_cells_ += member[c] ? 1 : 0;
        }
        const int res = grid_.resolution();
        for (std::size_t c = 0; c < cells; ++c) {
            const auto idx = grid_.index(c);
            for (int a = 0; a < n; ++a) {
                if (idx[static_cast<std::size_t>(a)] + 1 >= res) continue;
                auto nidx = idx;
                ++nidx[static_cast<std::size_t>(a)];
                const std::size_t nb = grid_.flat(nidx);
                for (std::size_t l = 0; l < nl; ++l) {
                    const double s0 = values[c * nl + l];
                    const double s1 = values[nb * nl + l];
                    if ((s0 <= 0.0) == (s1 <= 0.0)) continue;
                    const Vec p = bisect_leaf(l, grid_.center(c), grid_.center(nb));
                    if (oracle_.contains(p)) candidates_.push_back({Point(p), false});
                }
            }
            if (!member[c]) continue;
            for (int a = 0; a < n; ++a) {
                const int i = idx[static_cast<std::size_t>(a)];
                for (int side : {0, 1}) {
                    if ((side == 0 && i != 0) || (side == 1 && i != res - 1)) continue;
                    Vec p = grid_.center(c);
                    p[a] = side == 0 ? search_.region.min[a] : search_.region.max[a];
                    if (model().in_domain(p) && oracle_.contains(p)) candidates_.push_back({Point(p), true});
                }
            }
        }
        if (candidates_.empty()) {
            if (member_cells_ == 0) throw EmptySetError("set is empty in the search region");
            throw EmptySetError("set covers the search region; no boundary to project onto");
        }
    }

    Vec bisect_leaf(std::size_t leaf, const Vec& a, const Vec& b) const {
        auto f = [&](double t) { return oracle_.leaf_value(leaf, a + t * (b - a)); };
        boost::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, boost::math::tools::eps_tolerance<double>(48), iters);
        return a + 0.5 * (r.first + r.second) * (b - a);
    }

    // First point of G along the chart ray x + r u for r in [r_lo, r_hi], or nothing.
    std::optional<Vec> first_entry(const Vec& x, const Vec& u, double r_lo, double r_hi) const {
        constexpr int samples = 12;
        const std::size_t nl = oracle_.leaf_count();
        auto region_of = [&](double r) { return region_defect(x + r * u); };
        auto member_at = [&](const Vec& p) {
            return model().in_domain(p) && region_defect(p) <= 1e-12 && oracle_.contains(p);
        };
        if (member_at(x + r_lo * u)) {
            if (r_lo == 0.0) return x;
            return first_entry(x, u, 0.0, r_lo);
        }
        LeafValues prev, cur;
        double r_prev = r_lo;
        Vec p_prev = x + r_lo * u;
        if (!model().in_domain(p_prev)) return std::nullopt;
        oracle_.leaf_values(p_prev, prev);
        double g_prev = region_of(r_lo);
        for (int k = 1; k <= samples; ++k) {
            const double r = r_lo + (r_hi - r_lo) * k / samples;
            const Vec p = x + r * u;
            if (!model().in_domain(p)) return std::nullopt;
            oracle_.leaf_values(p, cur);
            const double g = region_of(r);
            std::optional<double> hit;
            auto consider = [&](auto&& fn, double f0, double f1) {
                if ((f0 <= 0.0) == (f1 <= 0.0)) return;
                boost::uintmax_t iters = 100;
                const auto br = boost::math::tools::toms748_solve(fn, r_prev, r, f0, f1,
                                                                  boost::math::tools::eps_tolerance<double>(50), iters);
                // Take the side of the bracket that is a member, if any.
                for (double rr : {br.first, br.second, 0.5 * (br.first + br.second)}) {
                    if (member_at(x + rr * u)) {
                        if (!hit || rr < *hit) hit = rr;
                        return;
                    }
                }
            };
            for (std::size_t l = 0; l < nl; ++l)
                consider([&](double rr) { return oracle_.leaf_value(l, x + rr * u); }, prev[l], cur[l]);
            consider(region_of, g_prev, g);
            if (!hit && member_at(p)) hit = r;
            if (hit) return Vec(x + *hit * u);
            prev = cur;
            g_prev = g;
            r_prev = r;
        }
        return std::nullopt;
    }

    MinimizerCluster refine(const Point& x, const Point& seed, double seed_distance) const {
        const MetricModel& model = this->model();
        const Vec d0 = seed.coords - x.coords;
        const double r0 = d0.norm();
        const double diag = grid_.diagonal();
        const double r_lo = std::max(0.0, r0 - 6.0 * diag);
        const double r_hi = r0 + 6.0 * diag;
        const double penalty = seed_distance + 1e6;
        // Close probes see their seed almost sideways, so the window opens to nearly a right angle.
        const double spread = std::min(std::atan2(3.0 * diag, r0), 1.56);
        std::optional<Vec> best_point;
        double best = std::numeric_limits<double>::infinity();
        // Misses are penalised by their angle from the window centre so the search slides back
        // toward directions that reach G.
        Vec center = d0 / r0;
        auto eval_dir = [&](const Vec& u) {
            auto hit = first_entry(x.coords, u, r_lo, r_hi);
            if (!hit) return penalty + std::acos(std::clamp(u.dot(center), -1.0, 1.0));
            const double d = distance(model, x, Point(*hit));
            if (d < best) {
                best = d;
                best_point = *hit;
            }
            return d;
        };
        auto search_around = [&](const Vec& u0) {
            if (model.dim() == 2) {
                const double theta0 = std::atan2(u0[1], u0[0]);
                auto f = [&](double dt) { return eval_dir(make_vec({std::cos(theta0 + dt), std::sin(theta0 + dt)})); };
                boost::uintmax_t it = static_cast<boost::uintmax_t>(search_.refine_iters);
                const auto coarse = boost::math::tools::brent_find_minima(f, -spread, spread, 26, it);
                const double w = std::max(1e-6, 50.0 * std::numeric_limits<double>::epsilon() + 1e-7 * spread);
                it = static_cast<boost::uintmax_t>(search_.refine_iters);
                auto g = [&](double s) { return f(coarse.first + s); };
                boost::math::tools::brent_find_minima(g, -w, w, 40, it);
            } else {
                Vec e1 = u0.unitOrthogonal();
                const Vec e2 = cross3(u0, e1);
                const double t = std::tan(spread);
                auto f = [&](const Eigen::Vector2d& ab) {
                    if (std::abs(ab[0]) > t || std::abs(ab[1]) > t) return penalty + 2.0;
                    return eval_dir(Vec((u0 + ab[0] * e1 + ab[1] * e2).normalized()));
                };
                auto [ab, fv] = detail::nelder_mead_2d(f, Eigen::Vector2d::Zero(), 0.5 * t, 40 * search_.refine_iters, 1e-11);
                (void)fv;
                detail::nelder_mead_2d(f, ab, 1e-5 * t, 40 * search_.refine_iters, 1e-13);
            }
        };
        // A window that stops short of the minimiser is re-centred on the best direction so far.
        eval_dir(center);
        bool inside_window = false;
        for (int attempt = 0; attempt < 4 && !inside_window; ++attempt) {
            search_around(center);
            if (!best_point) break;
            const Vec u_best = (*best_point - x.coords).normalized();
            inside_window = std::acos(std::clamp(u_best.dot(center), -1.0, 1.0)) < 0.98 * spread;
            center = u_best;
        }
        if (!best_point) return {seed, std::numeric_limits<double>::infinity(), false};
        // Angular refinement approaches a face minimiser only to within its own tolerance.
        const double face_tol = 1e-6 * std::max(1.0, search_.region.extent().maxCoeff());
        return {Point(*best_point), best, region_defect(*best_point) >= -face_tol, inside_window};
    }

    SetOracle oracle_;
    SearchSpec search_;
    CellGrid grid_;
    std::vector<BoundaryPoint> candidates_;
    std::size_t member_cells_ = 0;
};

/// d(x, G) with all minimisers: grid scan, multi-start local refinement, clustering.
inline ProjectionResult distance_to_set(const MetricModel& model, const ClosedSetSpec& set, const Point& x,
                                        const SearchSpec& search) {
    return SetSampler(model, set, search).query(x);
}

/// pi(x) (the identity on G); throws NonUniqueProjection when several points realise d(x, G).
inline Point project(const SetSampler& sampler, const Point& x) {
    ProjectionResult r = sampler.query(x);
    if (r.distance == 0.0) return x;
    if (!r.unique) throw NonUniqueProjection(x, std::move(r));
    if (r.region_edge) throw RangeError("projection lies on the search region boundary; enlarge the region");
    return r.minimizers.front();
}

inline Point project(const MetricModel& model, const ClosedSetSpec& set, const Point& x, const SearchSpec& search) {
    return project(SetSampler(model, set, search), x);
}

/// Points within 1e-8 (in defect) of the boundary of G, from grid cells where membership changes.
inline std::vector<Point> boundary_sample(const MetricModel& model, const ClosedSetSpec& set, const Box& region,
                                          int resolution) {
    if (resolution < 8) throw RangeError("boundary_sample needs at least 8 cells per axis");
    std::vector<Point> pts = SetSampler(model, set, SearchSpec{region, resolution}).boundary_points();
    if (pts.empty()) throw EmptySetError("no boundary of the set inside the region");
    return pts;
}

}  // namespace hadamard
