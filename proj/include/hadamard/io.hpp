#pragma once

#include "hadamard/counterexample.hpp"
#include "hadamard/retract.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace hadamard::io {

using json = nlohmann::json;

/// A parsed scene file. `params` keeps the command-specific block verbatim.
struct Scene {
    MetricModel model = MetricModel::euclidean(2);
    json metric;
    std::optional<ClosedSetSpec> set;
    json set_json;
    Box region;
    int resolution = 64;
    std::uint64_t seed = 0;
    std::string command;
    json params = json::object();
};

namespace detail {

[[noreturn]] inline void schema(const std::string& where, const std::string& what) {
    throw SchemaError(where + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) schema(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema(where, std::string("missing \"") + key + "\"");
    return *it;
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema(where, "expected a number");
    return j.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return number(j.at(key), where + "." + key);
}

}  // namespace detail

inline Vec parse_vec(const json& j, int dim, const std::string& where) {
    if (!j.is_array()) detail::schema(where, "expected an array of numbers");
    if (dim > 0 && static_cast<int>(j.size()) != dim)
        throw DimensionError(where + ": expected " + std::to_string(dim) + " coordinates, got " + std::to_string(j.size()));
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::number(j[i], where);
    return v;
}

inline Point parse_point(const json& j, int dim, const std::string& where) { return Point(parse_vec(j, dim, where)); }

inline json to_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const Point& p) { return to_json(p.coords); }

inline json to_json(const Box& b) { return json{{"min", to_json(b.min)}, {"max", to_json(b.max)}}; }

inline Box parse_box(const json& j, int dim, const std::string& where) {
    return Box{parse_vec(detail::field(j, "min", where), dim, where + ".min"),
               parse_vec(detail::field(j, "max", where), dim, where + ".max")};
}

// Non-finite numbers are written as strings so reports stay valid JSON.
inline json number_json(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

// ---------------------------------------------------------------------------------------------
// Metric and set expressions

inline MetricModel parse_metric(const json& j) {
    const std::string where = "metric";
    const json& model = detail::field(j, "model", where);
    if (!model.is_string()) detail::schema(where + ".model", "expected a string");
    const json& dim_j = detail::field(j, "dim", where);
    if (!dim_j.is_number_integer()) detail::schema(where + ".dim", "expected an integer");
    const int n = dim_j.get<int>();
    if (n != 2 && n != 3) throw DimensionError("metric.dim must be 2 or 3");
    const std::string m = model.get<std::string>();
    if (m == "euclidean") return MetricModel::euclidean(n);
    if (m == "half_space") return MetricModel::half_space(n);
    if (m == "ball") return MetricModel::ball(n);
    if (m == "conformal") {
        const json& f = detail::field(j, "field", where);
        if (!f.is_string()) detail::schema(where + ".field", "expected a catalog id");
        const auto field = conformal_field_from_string(f.get<std::string>());
        if (!field) detail::schema(where + ".field", "unknown catalog id \"" + f.get<std::string>() + "\"");
        std::optional<double> k;
        if (j.contains("k")) k = detail::number(j.at("k"), where + ".k");
        return MetricModel::conformal(n, *field, k);
    }
    detail::schema(where + ".model", "unknown model \"" + m + "\"");
}

inline json metric_to_json(const MetricModel& model) {
    const char* id = "euclidean";
    switch (model.kind()) {
        case MetricKind::euclidean: break;
        case MetricKind::half_space: id = "half_space"; break;
        case MetricKind::ball: id = "ball"; break;
        case MetricKind::conformal: id = "conformal"; break;
    }
    json j{{"model", id}, {"dim", model.dim()}};
    if (model.kind() == MetricKind::conformal) {
        j["field"] = std::string(to_string(model.field()));
        j["k"] = model.curvature_bound();
    }
    return j;
}

inline BusemannMode parse_mode(const json& j, const std::string& where) {
    if (!j.is_string()) detail::schema(where, "expected a string");
    const auto s = j.get<std::string>();
    if (s == "automatic") return BusemannMode::automatic;
    if (s == "numeric") return BusemannMode::numeric;
    if (s == "closed_form") return BusemannMode::closed_form;
    detail::schema(where, "unknown Busemann mode \"" + s + "\"");
}

inline std::string to_string(BusemannMode m) {
    switch (m) {
        case BusemannMode::automatic: return "automatic";
        case BusemannMode::numeric: return "numeric";
        case BusemannMode::closed_form: return "closed_form";
    }
    return "automatic";
}

/// {"base", "direction", "ray": "stable" | "unstable", "level", "mode"}
inline HoroballSpec parse_horoball(const MetricModel& model, const json& j, const std::string& where) {
    const int n = model.dim();
    const Point base = parse_point(detail::field(j, "base", where), n, where + ".base");
    model.require_domain(base);
    const Vec dir = parse_vec(detail::field(j, "direction", where), n, where + ".direction");
    const UnitTangent v = UnitTangent::from(model, base, dir);
    std::string ray = "stable";
    if (j.contains("ray")) {
        if (!j.at("ray").is_string()) detail::schema(where + ".ray", "expected \"stable\" or \"unstable\"");
        ray = j.at("ray").get<std::string>();
    }
    if (ray != "stable" && ray != "unstable") detail::schema(where + ".ray", "expected \"stable\" or \"unstable\"");
    HoroballSpec h = ray == "stable" ? stable_horoball(model, v) : unstable_horoball(model, v);
    h.level = detail::number_or(j, "level", 0.0, where);
    if (j.contains("mode")) h.functional.mode = parse_mode(j.at("mode"), where + ".mode");
    return h;
}

inline json horoball_to_json(const HoroballSpec& h) {
    return json{{"base", to_json(h.functional.base())},
                {"direction", to_json(h.functional.direction.components())},
                {"ray", "stable"},
                {"level", h.level},
                {"mode", to_string(h.functional.mode)}};
}

/// One-key objects: halfspace, ball, circle, ellipsoid, horoball_complement, closed_horoball,
/// horosphere, intersect, unite.
inline ClosedSetSpec parse_set(const MetricModel& model, const json& j, const std::string& where = "set") {
    if (!j.is_object() || j.size() != 1) detail::schema(where, "expected an object with exactly one key");
    const std::string key = j.begin().key();
    const json& body = j.begin().value();
    const std::string at = where + "." + key;
    const int n = model.dim();
    if (key == "intersect" || key == "unite") {
        if (!body.is_array() || body.empty()) detail::schema(at, "expected a nonempty array of sets");
        std::vector<ClosedSetSpec> args;
        for (std::size_t i = 0; i < body.size(); ++i) args.push_back(parse_set(model, body[i], at + "[" + std::to_string(i) + "]"));
        return key == "intersect" ? ClosedSetSpec::intersect(std::move(args)) : ClosedSetSpec::unite(std::move(args));
    }
    if (key == "halfspace")
        return ClosedSetSpec::halfspace(parse_vec(detail::field(body, "a", at), n, at + ".a"),
                                        detail::number(detail::field(body, "b", at), at + ".b"));
    if (key == "ball") {
        const Point c = parse_point(detail::field(body, "center", at), n, at + ".center");
        model.require_domain(c);
        return ClosedSetSpec::ball(c, detail::number(detail::field(body, "radius", at), at + ".radius"));
    }
    if (key == "circle")
        return ClosedSetSpec::circle(parse_vec(detail::field(body, "center", at), n, at + ".center"),
                                     detail::number(detail::field(body, "radius", at), at + ".radius"));
    if (key == "ellipsoid")
        return ClosedSetSpec::ellipsoid(parse_vec(detail::field(body, "center", at), n, at + ".center"),
                                        parse_vec(detail::field(body, "semi_axes", at), n, at + ".semi_axes"));
    if (key == "horoball_complement") return ClosedSetSpec::horoball_complement(parse_horoball(model, body, at));
    if (key == "closed_horoball") return ClosedSetSpec::closed_horoball(parse_horoball(model, body, at));
    if (key == "horosphere") return ClosedSetSpec::horosphere(parse_horoball(model, body, at));
    detail::schema(where, "unknown set kind \"" + key + "\"");
}

inline json set_to_json(const ClosedSetSpec& s) {
    switch (s.op()) {
        case ClosedSetSpec::Op::intersect:
        case ClosedSetSpec::Op::unite: {
            json a = json::array();
            for (const auto& c : s.args()) a.push_back(set_to_json(c));
            return json{{s.op() == ClosedSetSpec::Op::intersect ? "intersect" : "unite", a}};
        }
        case ClosedSetSpec::Op::leaf: break;
    }
    return std::visit(
        [](const auto& leaf) -> json {
            using T = std::decay_t<decltype(leaf)>;
            if constexpr (std::is_same_v<T, BallLeaf>) {
                return json{{"ball", {{"center", to_json(leaf.center)}, {"radius", leaf.radius}}}};
            } else if constexpr (std::is_same_v<T, HalfspaceLeaf>) {
                return json{{"halfspace", {{"a", to_json(leaf.a)}, {"b", leaf.b}}}};
            } else if constexpr (std::is_same_v<T, HoroLeaf>) {
                const char* key = leaf.part == HoroLeaf::Part::complement  ? "horoball_complement"
                                  : leaf.part == HoroLeaf::Part::closed_ball ? "closed_horoball"
                                                                             : "horosphere";
                return json{{key, horoball_to_json(leaf.spec)}};
            } else {
                if (leaf.field == SublevelField::circle)
                    return json{{"circle", {{"center", to_json(leaf.center)}, {"radius", leaf.radius}}}};
                return json{{"ellipsoid", {{"center", to_json(leaf.center)}, {"semi_axes", to_json(leaf.semi_axes)}}}};
            }
        },
        s.leaf());
}

// ---------------------------------------------------------------------------------------------
// Scene files

inline Scene parse_scene(const json& j) {
    if (!j.is_object()) throw SchemaError("scene: expected a JSON object");
    static const std::vector<std::string> known{"metric", "set", "region", "resolution", "seed", "command", "params"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw SchemaError("scene: unknown key \"" + it.key() + "\"");
    Scene s;
    s.metric = detail::field(j, "metric", "scene");
    s.model = parse_metric(s.metric);
    const int n = s.model.dim();
    if (j.contains("region")) {
        s.region = parse_box(j.at("region"), n, "region");
        require_box_in_domain(s.model, s.region);
    } else {
        throw SchemaError("scene: missing \"region\"");
    }
    if (j.contains("resolution")) {
        if (!j.at("resolution").is_number_integer() || j.at("resolution").get<int>() < 2)
            throw SchemaError("resolution: expected an integer >= 2");
        s.resolution = j.at("resolution").get<int>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw SchemaError("seed: expected a nonnegative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("command")) {
        if (!j.at("command").is_string()) throw SchemaError("command: expected a string");
        s.command = j.at("command").get<std::string>();
    }
    if (j.contains("params")) {
        if (!j.at("params").is_object()) throw SchemaError("params: expected an object");
        s.params = j.at("params");
    }
    if (j.contains("set")) {
        s.set_json = j.at("set");
        s.set = parse_set(s.model, s.set_json);
    }
    return s;
}

inline Scene parse_scene_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scene is not valid JSON: ") + e.what());
    }
    return parse_scene(j);
}

inline Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scene file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene_text(ss.str());
}

inline json scene_to_json(const Scene& s) {
    json j{{"metric", metric_to_json(s.model)},
           {"region", to_json(s.region)},
           {"resolution", s.resolution},
           {"seed", s.seed},
           {"params", s.params}};
    if (s.set) j["set"] = set_to_json(*s.set);
    if (!s.command.empty()) j["command"] = s.command;
    return j;
}

// ---------------------------------------------------------------------------------------------
// Reports

inline json to_json(const CurvatureReport& r) {
    return json{{"K_min", number_json(r.k_min)},
                {"K_max", number_json(r.k_max)},
                {"ok", r.all_in_bounds},
                {"samples", r.samples}};
}

inline json to_json(const Witness& w) {
    json pts = json::array(), vals = json::array();
    for (const auto& p : w.points) pts.push_back(to_json(p));
    for (double v : w.values) vals.push_back(number_json(v));
    json j{{"kind", to_string(w.kind)}, {"probe", to_json(w.probe)}, {"points", pts}, {"values", vals}};
    if (w.kind == WitnessKind::geodesic) j["t"] = w.t;
    return j;
}

inline json to_json(const ConvexityCertificate& c) {
    json ws = json::array();
    for (const auto& w : c.witnesses) ws.push_back(to_json(w));
    return json{{"verdict", to_string(c.verdict)},
                {"region", to_json(c.region)},
                {"resolution", c.resolution},
                {"probes", c.probes},
                {"skipped_members", c.skipped_members},
                {"skipped_edge", c.skipped_edge},
                {"min_uniqueness_margin", number_json(c.min_uniqueness_margin)},
                {"min_horobowl_margin", number_json(c.min_horobowl_margin)},
                {"horobowl_tolerance", c.horobowl_tolerance},
                {"gradient",
                 {{"probes", c.gradient.probes},
                  {"worst_deviation", c.gradient.worst_deviation},
                  {"min_norm", number_json(c.gradient.min_norm)},
                  {"max_norm", c.gradient.max_norm}}},
                {"violations", c.violations},
                {"witnesses", ws}};
}

inline json to_json(const GeodesicConvexityReport& r) {
    json ws = json::array();
    for (const auto& w : r.violations) ws.push_back(to_json(w));
    return json{{"pairs", r.pairs}, {"checks", r.checks}, {"convex", r.convex()}, {"violations", ws}};
}

inline json to_json(const ProjectionResult& r) {
    json mins = json::array(), clusters = json::array();
    for (const auto& m : r.minimizers) mins.push_back(to_json(m));
    for (const auto& c : r.clusters)
        clusters.push_back(json{{"point", to_json(c.point)},
                                {"distance", c.distance},
                                {"on_region_edge", c.on_region_edge},
                                {"local_minimum", c.local_minimum}});
    return json{{"distance", r.distance},
                {"minimizers", mins},
                {"unique", r.unique},
                {"clusters", clusters},
                {"region_edge", r.region_edge},
                {"degraded", r.degraded}};
}

inline json to_json(const HomotopyTrace& t) {
    json samples = json::array();
    for (const auto& s : t.samples) samples.push_back(json{{"t", s.t}, {"point", to_json(s.point)}});
    return json{{"start", to_json(t.start)}, {"endpoint", to_json(t.endpoint)}, {"samples", samples}};
}

inline json to_json(const ContinuityReport& r) {
    return json{{"base", to_json(r.base)},
                {"epsilon", r.epsilon},
                {"samples", r.samples},
                {"max_displacement", r.max_displacement},
                {"bound", r.bound()},
                {"within_bound", r.within_bound()},
                {"worst_sample", to_json(r.worst_sample)}};
}

inline json to_json(const GeodesicPath& g) {
    json samples = json::array();
    for (const auto& s : g.samples) samples.push_back(json{{"t", s.t}, {"point", to_json(s.point)}});
    return json{{"length", g.length}, {"initial_velocity", to_json(g.initial_velocity())}, {"samples", samples}};
}

inline json to_json(const ComponentReport& r) {
    json reps = json::array();
    for (const auto& p : r.representatives) reps.push_back(to_json(p));
    return json{{"count", r.count},
                {"mode", to_string(r.mode)},
                {"region", to_json(r.region)},
                {"resolution", r.resolution},
                {"representatives", reps},
                {"sizes", r.sizes},
                {"member_cells", r.member_cells},
                {"interior_cells", r.interior_cells},
                {"dropped", r.dropped}};
}

inline json to_json(const NonUniquenessWitness& w) {
    json mins = json::array();
    for (const auto& m : w.minimizers) mins.push_back(to_json(m));
    return json{{"x", to_json(w.x)},
                {"minimizers", mins},
                {"distances", w.distances},
                {"separation", w.separation},
                {"agreement", w.agreement}};
}

inline json to_json(const WitnessProbe& p) {
    return json{{"x", to_json(p.x)},
                {"distance", p.distance},
                {"minimizers", p.minimizers},
                {"separation", p.separation},
                {"agreement", p.agreement}};
}

inline json to_json(const EuclideanControlReport& r) {
    json j{{"epsilon", r.epsilon}, {"empty", r.empty}, {"components", r.components}};
    j["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
    j["certificate"] = r.certificate ? to_json(*r.certificate) : json(nullptr);
    return j;
}

/// Cell labels as CSV: one row per grid line (first axis along the row); slices of a 3D grid are
/// separated by an empty line.
inline std::string labels_csv(const ComponentReport& r) {
    const int res = r.resolution;
    const int n = r.region.dim();
    const int slices = n == 3 ? res : 1;
    std::string out;
    std::size_t k = 0;
    for (int s = 0; s < slices; ++s) {
        if (s > 0) out += '\n';
        for (int row = 0; row < res; ++row) {
            for (int col = 0; col < res; ++col) {
                if (col > 0) out += ',';
                out += std::to_string(r.labels[k++]);
            }
            out += '\n';
        }
    }
    return out;
}

/// Two-space indented dump with a trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hadamard::io
