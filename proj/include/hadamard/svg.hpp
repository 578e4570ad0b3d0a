#pragma once

#include "hadamard/counterexample.hpp"
#include "hadamard/retract.hpp"

#include <cstdio>

namespace hadamard::svg {

/// Chart-coordinate SVG canvas over the first two axes of a box (y up). Diagnostics only:
/// nothing is drawn metrically true.
class Canvas {
public:
    explicit Canvas(const Box& view, int width = 640) : view_(view), width_(width) {
        const double w = view.max[0] - view.min[0], h = view.max[1] - view.min[1];
        if (!(w > 0.0 && h > 0.0)) throw RangeError("svg view must have positive extent");
        scale_ = (width_ - 2 * kPad) / w;
        height_ = static_cast<int>(std::lround(h * scale_)) + 2 * kPad;
    }

    double px(double x) const { return kPad + (x - view_.min[0]) * scale_; }
    double py(double y) const { return height_ - kPad - (y - view_.min[1]) * scale_; }

    void rect(double x0, double y0, double x1, double y1, const std::string& fill) {
        body_ += "<rect x=\"" + f(px(x0)) + "\" y=\"" + f(py(y1)) + "\" width=\"" + f(px(x1) - px(x0)) + "\" height=\"" +
                 f(py(y0) - py(y1)) + "\" fill=\"" + fill + "\"/>\n";
    }

    void line(const Vec& a, const Vec& b, const std::string& stroke, double width = 1.0, bool dashed = false) {
        body_ += "<line x1=\"" + f(px(a[0])) + "\" y1=\"" + f(py(a[1])) + "\" x2=\"" + f(px(b[0])) + "\" y2=\"" + f(py(b[1])) +
                 "\" stroke=\"" + stroke + "\" stroke-width=\"" + f(width) + "\"" +
                 (dashed ? " stroke-dasharray=\"4 3\"" : "") + "/>\n";
    }

    void polyline(const std::vector<Vec>& pts, const std::string& stroke, double width = 1.5) {
        if (pts.size() < 2) return;
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + f(width) + "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) body_ += (i ? " " : "") + f(px(pts[i][0])) + "," + f(py(pts[i][1]));
        body_ += "\"/>\n";
    }

    void dot(const Vec& p, const std::string& fill, double radius = 3.0) {
        body_ += "<circle cx=\"" + f(px(p[0])) + "\" cy=\"" + f(py(p[1])) + "\" r=\"" + f(radius) + "\" fill=\"" + fill + "\"/>\n";
    }

    void ring(const Vec& center, double r, const std::string& stroke, bool dashed = false) {
        body_ += "<circle cx=\"" + f(px(center[0])) + "\" cy=\"" + f(py(center[1])) + "\" r=\"" + f(r * scale_) +
                 "\" fill=\"none\" stroke=\"" + stroke + "\"" + (dashed ? " stroke-dasharray=\"4 3\"" : "") + "/>\n";
    }

    void text(const Vec& p, const std::string& s, int size = 11) {
        body_ += "<text x=\"" + f(px(p[0])) + "\" y=\"" + f(py(p[1])) + "\" font-size=\"" + std::to_string(size) +
                 "\" font-family=\"monospace\">" + escape(s) + "</text>\n";
    }

    /// Axes through the origin where visible, and the edge of the chart domain.
    void frame(const MetricModel& model) {
        const Vec lo = view_.min.head(2), hi = view_.max.head(2);
        if (lo[1] <= 0.0 && hi[1] >= 0.0) line(make_vec({lo[0], 0.0}), make_vec({hi[0], 0.0}), "#999", 0.8);
        if (lo[0] <= 0.0 && hi[0] >= 0.0) line(make_vec({0.0, lo[1]}), make_vec({0.0, hi[1]}), "#999", 0.8);
        if (model.kind() == MetricKind::half_space && model.dim() == 2)
            line(make_vec({lo[0], 0.0}), make_vec({hi[0], 0.0}), "#000", 1.5, true);
        if (model.kind() == MetricKind::ball) ring(make_vec({0.0, 0.0}), 1.0, "#000", true);
        body_ += "<rect x=\"" + f(px(lo[0])) + "\" y=\"" + f(py(hi[1])) + "\" width=\"" + f(px(hi[0]) - px(lo[0])) +
                 "\" height=\"" + f(py(lo[1]) - py(hi[1])) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    }

    std::string str() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
               std::to_string(height_) + "\" viewBox=\"0 0 " + std::to_string(width_) + " " + std::to_string(height_) +
               "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" + body_ + "</svg>\n";
    }

private:
    static constexpr int kPad = 20;

    static std::string f(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }

    static std::string escape(const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    }

    Box view_;
    int width_;
    int height_ = 0;
    double scale_ = 1.0;
    std::string body_;
};

inline const std::string& tone(int k) {
    static const std::vector<std::string> tones{"#4e79a7", "#f28e2b", "#59a14f", "#b07aa1", "#76b7b2", "#edc948", "#e15759"};
    return tones[static_cast<std::size_t>(k) % tones.size()];
}

// Shades cells of a planar grid, merging horizontal runs of equal colour (empty = unshaded).
template <class ColourOf>
void shade_cells(Canvas& c, const CellGrid& grid, ColourOf colour_of) {
    const int res = grid.resolution();
    const Box& r = grid.region();
    const Vec& h = grid.step();
    for (int j = 0; j < res; ++j) {
        int i = 0;
        while (i < res) {
            const std::string col = colour_of(grid.flat({i, j, 0}));
            int k = i + 1;
            while (k < res && colour_of(grid.flat({k, j, 0})) == col) ++k;
            if (!col.empty()) c.rect(r.min[0] + i * h[0], r.min[1] + j * h[1], r.min[0] + k * h[0], r.min[1] + (j + 1) * h[1], col);
            i = k;
        }
    }
}

/// Members of the set shaded on a grid of at most 160 cells per axis (planar scenes only).
inline void draw_set(Canvas& c, const MetricModel& model, const ClosedSetSpec& set, const Box& region, int resolution,
                     const std::string& fill = "#c6dbef") {
    if (model.dim() != 2) return;
    const SetOracle oracle(model, set);
    const CellGrid grid(region, std::min(resolution, 160));
    shade_cells(c, grid, [&](std::size_t k) { return oracle.contains(grid.center(k)) ? fill : std::string(); });
}

inline void draw_components(Canvas& c, const ComponentReport& r) {
    if (r.region.dim() != 2) return;
    const CellGrid grid(r.region, r.resolution);
    shade_cells(c, grid, [&](std::size_t k) { return r.labels[k] < 0 ? std::string() : tone(r.labels[k]); });
}

inline std::vector<Vec> trace_points(const HomotopyTrace& t) {
    std::vector<Vec> pts;
    for (const auto& s : t.samples) pts.push_back(s.point.coords);
    return pts;
}

/// Geodesic from x to y sampled as a chart polyline.
inline std::vector<Vec> geodesic_points(const MetricModel& model, const Point& x, const Point& y, int samples = 24) {
    std::vector<Vec> pts{x.coords};
    if (x.coords == y.coords) return pts;
    const Vec v = log_map(model, x, y);
    for (int i = 1; i <= samples; ++i) pts.push_back(exp_ivp(model, TangentVector{x, v}, double(i) / samples).base.coords);
    return pts;
}

}  // namespace hadamard::svg
