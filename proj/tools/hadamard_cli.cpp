#include "hadamard/io.hpp"
#include "hadamard/svg.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace hadamard;
using io::json;

namespace {

enum Exit { kOk = 0, kSchema = 2, kDomain = 3, kViolation = 4 };

struct Options {
    std::string scene_path;
    std::string out_path;
    std::string svg_path;
    std::string csv_path;
    std::string command;
    std::string model;
    std::optional<int> resolution;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
};

struct Outcome {
    json report;
    int code = kOk;
    std::string svg;
    std::string csv;
};

Outcome outcome(json report) {
    Outcome o;
    o.report = std::move(report);
    return o;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path);
    out << text;
}

const json& param(const io::Scene& s, const char* key) {
    if (!s.params.contains(key)) throw SchemaError(std::string("params: missing \"") + key + "\"");
    return s.params.at(key);
}

int int_param(const io::Scene& s, const char* key, int fallback) {
    if (!s.params.contains(key)) return fallback;
    if (!s.params.at(key).is_number_integer()) throw SchemaError(std::string("params.") + key + ": expected an integer");
    return s.params.at(key).get<int>();
}

double double_param(const io::Scene& s, const char* key, double fallback) {
    if (!s.params.contains(key)) return fallback;
    if (!s.params.at(key).is_number()) throw SchemaError(std::string("params.") + key + ": expected a number");
    return s.params.at(key).get<double>();
}

const ClosedSetSpec& require_set(const io::Scene& s) {
    if (!s.set) throw SchemaError("scene: this command needs a \"set\"");
    return *s.set;
}

json header(const io::Scene& s, const std::string& command) {
    return json{{"command", command}, {"seed", s.seed}, {"metric", io::metric_to_json(s.model)}, {"region", io::to_json(s.region)}};
}

Outcome cmd_curvature(const io::Scene& s) {
    const CurvatureReport r = verify_curvature_bounds(s.model, s.region, int_param(s, "grid", 9), s.seed);
    Outcome o = outcome(header(s, "curvature"));
    o.report.update(io::to_json(r));
    o.code = r.all_in_bounds ? kOk : kViolation;
    return o;
}

Outcome cmd_certify(const io::Scene& s) {
    const ClosedSetSpec& set = require_set(s);
    const SetSampler sampler(s.model, set, SearchSpec{s.region, s.resolution});
    const ConvexityCertificate cert = certify_weak_convexity(sampler, s.resolution);
    Outcome o = outcome(header(s, "certify"));
    o.report["set"] = io::set_to_json(set);
    o.report["certificate"] = io::to_json(cert);
    const int pairs = int_param(s, "geodesic_pairs", 0);
    if (pairs > 0)
        o.report["geodesic_convexity"] =
            io::to_json(check_geodesic_convexity(s.model, set, sample_member_pairs(sampler, static_cast<std::size_t>(pairs), s.seed)));
    o.code = cert.verdict == Verdict::violated ? kViolation : kOk;
    if (s.model.dim() == 2) {
        svg::Canvas c(s.region);
        svg::draw_set(c, s.model, set, s.region, s.resolution);
        c.frame(s.model);
        for (const auto& w : cert.witnesses) {
            c.dot(w.probe.coords, "#d62728");
            for (const auto& p : w.points) c.line(w.probe.coords, p.coords, "#d62728", 0.8);
        }
        c.text(make_vec({s.region.min[0], s.region.max[1]}), "certify: " + to_string(cert.verdict));
        o.svg = c.str();
    }
    return o;
}

Outcome cmd_retract(const io::Scene& s) {
    const ClosedSetSpec& set = require_set(s);
    const SetSampler sampler(s.model, set, SearchSpec{s.region, s.resolution});
    const Point x = io::parse_point(param(s, "x"), s.model.dim(), "params.x");
    s.model.require_domain(x);
    Outcome o = outcome(header(s, "retract"));
    o.report["x"] = io::to_json(x);
    try {
        const HomotopyTrace t = retract_trace(sampler, x, int_param(s, "steps", 9));
        o.report["trace"] = io::to_json(t);
        if (s.params.contains("continuity_epsilon")) {
            const Point foot = t.endpoint;
            o.report["continuity"] = io::to_json(continuity_probe(
                sampler, foot, double_param(s, "continuity_epsilon", 0.1), static_cast<std::size_t>(int_param(s, "continuity_samples", 50)), s.seed));
        }
        if (s.model.dim() == 2) {
            svg::Canvas c(s.region);
            svg::draw_set(c, s.model, set, s.region, s.resolution);
            c.frame(s.model);
            c.polyline(svg::trace_points(t), "#d62728");
            c.dot(t.start.coords, "#000");
            c.dot(t.endpoint.coords, "#d62728");
            o.svg = c.str();
        }
    } catch (const NonUniqueProjection& e) {
        o.report["error"] = "projection is not unique";
        o.report["projection"] = io::to_json(e.result());
        o.code = kViolation;
    }
    return o;
}

Outcome cmd_project(const io::Scene& s) {
    const ClosedSetSpec& set = require_set(s);
    const SetSampler sampler(s.model, set, SearchSpec{s.region, s.resolution});
    const Point x = io::parse_point(param(s, "x"), s.model.dim(), "params.x");
    const ProjectionResult r = sampler.query(x);
    Outcome o = outcome(header(s, "project"));
    o.report["x"] = io::to_json(x);
    o.report["projection"] = io::to_json(r);
    o.code = r.unique ? kOk : kViolation;
    if (s.model.dim() == 2) {
        svg::Canvas c(s.region);
        svg::draw_set(c, s.model, set, s.region, s.resolution);
        c.frame(s.model);
        for (const auto& m : r.minimizers) c.polyline(svg::geodesic_points(s.model, x, m), "#d62728");
        c.dot(x.coords, "#000");
        o.svg = c.str();
    }
    return o;
}

Outcome cmd_geodesic(const io::Scene& s) {
    const int n = s.model.dim();
    Outcome o = outcome(header(s, "geodesic"));
    if (s.params.contains("y")) {
        const Point x = io::parse_point(param(s, "x"), n, "params.x");
        const Point y = io::parse_point(param(s, "y"), n, "params.y");
        const GeodesicPath p = connect_bvp(s.model, x, y);
        o.report["x"] = io::to_json(x);
        o.report["y"] = io::to_json(y);
        o.report["distance"] = distance(s.model, x, y);
        o.report["path"] = io::to_json(p);
        if (n == 2) {
            svg::Canvas c(s.region);
            c.frame(s.model);
            std::vector<Vec> pts;
            for (const auto& smp : p.samples) pts.push_back(smp.point.coords);
            c.polyline(pts, "#1f77b4");
            o.svg = c.str();
        }
    } else {
        const Point x = io::parse_point(param(s, "x"), n, "params.x");
        const Vec v = io::parse_vec(param(s, "v"), n, "params.v");
        const double t = double_param(s, "t", 1.0);
        s.model.require_domain(x);
        const TangentVector end = exp_ivp(s.model, TangentVector{x, v}, t);
        o.report["x"] = io::to_json(x);
        o.report["v"] = io::to_json(v);
        o.report["t"] = t;
        o.report["endpoint"] = io::to_json(end.base);
        o.report["velocity"] = io::to_json(end.components);
    }
    return o;
}

Outcome cmd_busemann(const io::Scene& s) {
    const int n = s.model.dim();
    const Point base = io::parse_point(param(s, "base"), n, "params.base");
    s.model.require_domain(base);
    BusemannFunctional f{UnitTangent::from(s.model, base, io::parse_vec(param(s, "direction"), n, "params.direction"))};
    if (s.params.contains("mode")) f.mode = io::parse_mode(s.params.at("mode"), "params.mode");
    const BusemannEvaluator eval(s.model, f);
    const json& pts = param(s, "points");
    if (!pts.is_array()) throw SchemaError("params.points: expected an array of points");
    json values = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point x = io::parse_point(pts[i], n, "params.points");
        s.model.require_domain(x);
        const BusemannValue v = eval(x);
        values.push_back(json{{"x", io::to_json(x)},
                              {"value", v.value},
                              {"gap", io::number_json(v.gap)},
                              {"converged", v.converged},
                              {"horizon", v.horizon}});
    }
    Outcome o = outcome(header(s, "busemann"));
    o.report["closed_form"] = eval.closed_form();
    o.report["values"] = values;
    bool all = true;
    for (const auto& v : values) all = all && v.at("converged").get<bool>();
    o.code = all ? kOk : kDomain;
    return o;
}

Outcome cmd_counterexample(const io::Scene& s, double epsilon) {
    std::string model = "hyperbolic";
    if (s.params.contains("model")) {
        if (!s.params.at("model").is_string()) throw SchemaError("params.model: expected \"hyperbolic\" or \"euclidean\"");
        model = s.params.at("model").get<std::string>();
    }
    if (model != "hyperbolic" && model != "euclidean") throw SchemaError("params.model: expected \"hyperbolic\" or \"euclidean\"");
    if (!(epsilon >= 0.0)) throw RangeError("epsilon must be nonnegative");
    Outcome o = outcome(json{{"command", "counterexample"}, {"seed", s.seed}, {"model", model}, {"epsilon", epsilon}, {"resolution", s.resolution}});
    if (model == "euclidean") {
        const EuclideanControlReport r = euclidean_control(epsilon, s.resolution);
        o.report.update(io::to_json(r));
        return o;
    }
    const TheoremScene scene =
        build_theorem_scene(MetricModel::half_space(2), Point{0, 1}, make_vec({0, 1}), epsilon, s.region, s.resolution);
    const ComponentReport comps = connected_components(scene);
    const WitnessSearch ws = nonuniqueness_witness(scene);
    const int cert_res = int_param(s, "certify_resolution", 64);
    const ConvexityCertificate c1 = certify_weak_convexity(scene.model, scene.G1, s.region, cert_res);
    const ConvexityCertificate c2 = certify_weak_convexity(scene.model, scene.G2, s.region, cert_res);
    o.report["region"] = io::to_json(s.region);
    o.report["components"] = comps.count;
    o.report["component_report"] = io::to_json(comps);
    o.report["witness"] = ws.witness ? io::to_json(*ws.witness) : json(nullptr);
    json probes = json::array();
    for (const auto& p : ws.probes) probes.push_back(io::to_json(p));
    o.report["witness_probes"] = probes;
    o.report["G1"] = json{{"verdict", to_string(c1.verdict)}, {"probes", c1.probes}, {"violations", c1.violations}};
    o.report["G2"] = json{{"verdict", to_string(c2.verdict)}, {"probes", c2.probes}, {"violations", c2.violations}};
    o.csv = io::labels_csv(comps);

    svg::Canvas c(s.region);
    svg::draw_components(c, comps);
    c.frame(scene.model);
    const double r = 0.5 * std::exp(epsilon);
    c.ring(make_vec({0.0, r}), r, "#555", true);
    c.line(make_vec({s.region.min[0], 1.0}), make_vec({s.region.max[0], 1.0}), "#555", 1.0, true);
    if (ws.witness) {
        c.dot(ws.witness->x.coords, "#d62728");
        for (const auto& m : ws.witness->minimizers) {
            c.polyline(svg::geodesic_points(scene.model, ws.witness->x, m), "#d62728");
            c.dot(m.coords, "#d62728");
        }
    }
    c.text(make_vec({s.region.min[0], s.region.max[1]}), "components: " + std::to_string(comps.count));
    o.svg = c.str();
    return o;
}

io::Scene default_counterexample_scene() {
    io::Scene s;
    s.model = MetricModel::half_space(2);
    s.region = make_box({-2, 0.02}, {2, 1.2});
    s.resolution = 512;
    s.command = "counterexample";
    return s;
}

int run(const Options& opt) {
    io::Scene s = opt.scene_path.empty() ? default_counterexample_scene() : io::load_scene(opt.scene_path);
    std::string command = opt.command.empty() ? s.command : opt.command;
    if (command.empty()) throw SchemaError("no command given (--command or the scene's \"command\")");
    if (opt.scene_path.empty() && command != "counterexample") throw SchemaError("--scene is required for " + command);
    if (opt.resolution) {
        if (*opt.resolution < 2) throw SchemaError("--resolution must be at least 2");
        s.resolution = *opt.resolution;
    }
    if (opt.seed) s.seed = *opt.seed;
    if (!opt.model.empty()) s.params["model"] = opt.model;
    const double epsilon = opt.epsilon ? *opt.epsilon : double_param(s, "epsilon", 0.3);

    Outcome o;
    if (command == "curvature") o = cmd_curvature(s);
    else if (command == "certify") o = cmd_certify(s);
    else if (command == "retract") o = cmd_retract(s);
    else if (command == "counterexample") o = cmd_counterexample(s, epsilon);
    else if (command == "project") o = cmd_project(s);
    else if (command == "geodesic") o = cmd_geodesic(s);
    else if (command == "busemann") o = cmd_busemann(s);
    else throw SchemaError("unknown command \"" + command + "\"");

    o.report["exit_code"] = o.code;
    const std::string text = io::dump(o.report);
    if (opt.out_path.empty()) std::cout << text;
    else write_file(opt.out_path, text);
    if (!opt.svg_path.empty()) {
        if (o.svg.empty()) std::cerr << "note: no SVG for this command or dimension\n";
        else write_file(opt.svg_path, o.svg);
    }
    if (!opt.csv_path.empty()) {
        if (o.csv.empty()) std::cerr << "note: no CSV labelling for this command\n";
        else write_file(opt.csv_path, o.csv);
    }
    return o.code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geodesics, horoballs, projections and weak convexity on Cartan-Hadamard model spaces"};
    Options opt;
    app.add_option("--scene", opt.scene_path, "scene JSON file");
    app.add_option("--out", opt.out_path, "report path (default stdout)");
    app.add_option("--svg", opt.svg_path, "SVG plot path");
    app.add_option("--csv", opt.csv_path, "component labels as CSV (counterexample)");
    app.add_option("--command", opt.command, "command to run")
        ->check(CLI::IsMember({"curvature", "certify", "retract", "counterexample", "project", "geodesic", "busemann"}));
    app.add_option("--model", opt.model, "counterexample model")->check(CLI::IsMember({"hyperbolic", "euclidean"}));
    app.add_option("--resolution", opt.resolution, "grid resolution per axis");
    app.add_option("--epsilon", opt.epsilon, "flow time for the counterexample");
    app.add_option("--seed", opt.seed, "seed for every random draw");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kSchema;
    }
    try {
        return run(opt);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const json::exception& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomain;
    }
}
