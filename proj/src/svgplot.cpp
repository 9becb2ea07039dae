#include "skillforge/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "skillforge/common.hpp"

namespace skillforge::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Frame {
    double x0, x1, y0, y1;       // data range
    double px0, px1, py0, py1;   // pixel box (py0 is top)

    double px(double x) const {
        double t = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.5;
        return px0 + t * (px1 - px0);
    }
    double py(double y) const {
        double t = (y1 > y0) ? (y - y0) / (y1 - y0) : 0.5;
        return py1 - t * (py1 - py0);
    }
};

void draw_axes(std::ofstream& os, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    os << "<rect x='" << num(f.px0) << "' y='" << num(f.py0) << "' width='" << num(f.px1 - f.px0)
       << "' height='" << num(f.py1 - f.py0) << "' fill='none' stroke='#333'/>\n";
    for (int i = 0; i <= 4; ++i) {
        double xv = f.x0 + i * (f.x1 - f.x0) / 4;
        double yv = f.y0 + i * (f.y1 - f.y0) / 4;
        os << "<text x='" << num(f.px(xv)) << "' y='" << num(f.py1 + 14)
           << "' font-size='9' text-anchor='middle' fill='#333'>" << num(xv) << "</text>\n";
        os << "<text x='" << num(f.px0 - 4) << "' y='" << num(f.py(yv) + 3)
           << "' font-size='9' text-anchor='end' fill='#333'>" << num(yv) << "</text>\n";
    }
    os << "<text x='" << num((f.px0 + f.px1) / 2) << "' y='" << num(f.py1 + 28)
       << "' font-size='11' text-anchor='middle' fill='#111'>" << x_label << "</text>\n";
    os << "<text x='" << num(f.px0 - 34) << "' y='" << num((f.py0 + f.py1) / 2)
       << "' font-size='11' text-anchor='middle' fill='#111' transform='rotate(-90 "
       << num(f.px0 - 34) << " " << num((f.py0 + f.py1) / 2) << ")'>" << y_label << "</text>\n";
}

}  // namespace

void write_curve_plot(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series) {
    if (series.empty()) throw std::invalid_argument("curve plot: no series");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.mean[i] - s.stddev[i]);
            y1 = std::max(y1, s.mean[i] + s.stddev[i]);
        }
    }
    if (!(x0 <= x1)) throw std::invalid_argument("curve plot: empty series data");
    if (y0 == y1) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double width = 560, height = 360;
    Frame f{x0, x1, y0, y1, 60, width - 16, 28, height - 40};

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write plot: " + path.string());
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "' viewBox='0 0 " << width << " " << height << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='18' font-size='13' text-anchor='middle' fill='#111'>"
       << title << "</text>\n";
    draw_axes(os, f, x_label, y_label);

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % kPaletteSize];
        bool any_band = false;
        for (double sd : s.stddev)
            if (sd > 0) any_band = true;
        if (any_band && s.x.size() > 1) {
            os << "<polygon fill='" << color << "' fill-opacity='0.15' stroke='none' points='";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                os << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i] + s.stddev[i])) << " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                os << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i] - s.stddev[i])) << " ";
            os << "'/>\n";
        }
        os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << num(f.px(s.x[i])) << "," << num(f.py(s.mean[i])) << " ";
        os << "'/>\n";
        double ly = 40 + 14 * static_cast<double>(si);
        os << "<rect x='" << num(f.px0 + 8) << "' y='" << num(ly - 8)
           << "' width='10' height='10' fill='" << color << "'/>\n";
        os << "<text x='" << num(f.px0 + 22) << "' y='" << num(ly) << "' font-size='10' fill='#111'>"
           << s.label << "</text>\n";
    }
    os << "</svg>\n";
    if (!os) throw IoError("failed writing plot: " + path.string());
}

void write_histogram_grid(const std::filesystem::path& path, const std::string& title,
                          const std::vector<HistogramPanel>& panels, int columns) {
    if (columns < 1) columns = 1;
    const double pw = 170, ph = 130, margin = 12, header = 26;
    int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
    double width = margin + columns * (pw + margin);
    double height = header + rows * (ph + margin) + margin;

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write plot: " + path.string());
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "' viewBox='0 0 " << width << " " << height << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='17' font-size='13' text-anchor='middle' fill='#111'>"
       << title << "</text>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        int row = static_cast<int>(p) / columns;
        int col = static_cast<int>(p) % columns;
        double ox = margin + col * (pw + margin);
        double oy = header + row * (ph + margin);
        os << "<rect x='" << num(ox) << "' y='" << num(oy) << "' width='" << pw << "' height='" << ph
           << "' fill='none' stroke='#999'/>\n";
        os << "<text x='" << num(ox + pw / 2) << "' y='" << num(oy + 12)
           << "' font-size='9' text-anchor='middle' fill='#111'>" << panel.title << "</text>\n";
        if (panel.counts.empty()) continue;
        double cmax = *std::max_element(panel.counts.begin(), panel.counts.end());
        if (cmax <= 0) cmax = 1;
        double e0 = panel.bin_edges.front(), e1 = panel.bin_edges.back();
        double plot_h = ph - 22, base_y = oy + ph - 4;
        for (std::size_t i = 0; i < panel.counts.size(); ++i) {
            double bx0 = ox + 4 + (pw - 8) * (panel.bin_edges[i] - e0) / (e1 - e0);
            double bx1 = ox + 4 + (pw - 8) * (panel.bin_edges[i + 1] - e0) / (e1 - e0);
            double h = plot_h * panel.counts[i] / cmax;
            os << "<rect x='" << num(bx0) << "' y='" << num(base_y - h) << "' width='"
               << num(std::max(bx1 - bx0 - 0.5, 0.5)) << "' height='" << num(h)
               << "' fill='#1f77b4'/>\n";
        }
        os << "<text x='" << num(ox + 4) << "' y='" << num(base_y + 0)
           << "' font-size='7' fill='#555'>" << num(e0) << "</text>\n";
        os << "<text x='" << num(ox + pw - 4) << "' y='" << num(base_y + 0)
           << "' font-size='7' text-anchor='end' fill='#555'>" << num(e1) << "</text>\n";
    }
    os << "</svg>\n";
    if (!os) throw IoError("failed writing plot: " + path.string());
}

void write_scene_grid(const std::filesystem::path& path, const std::string& title,
                      const std::vector<UnitSquareScene>& scenes, int columns) {
    if (columns < 1) columns = 1;
    const double pw = 180, margin = 12, header = 26;
    int rows = (static_cast<int>(scenes.size()) + columns - 1) / columns;
    double width = margin + columns * (pw + margin);
    double height = header + rows * (pw + margin) + margin;

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write plot: " + path.string());
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "' viewBox='0 0 " << width << " " << height << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='17' font-size='13' text-anchor='middle' fill='#111'>"
       << title << "</text>\n";
    for (std::size_t p = 0; p < scenes.size(); ++p) {
        const auto& scene = scenes[p];
        int row = static_cast<int>(p) / columns;
        int col = static_cast<int>(p) % columns;
        double ox = margin + col * (pw + margin);
        double oy = header + row * (pw + margin);
        auto sx = [&](double x) { return ox + x * pw; };
        auto sy = [&](double y) { return oy + (1.0 - y) * pw; };
        os << "<rect x='" << num(ox) << "' y='" << num(oy) << "' width='" << pw << "' height='" << pw
           << "' fill='none' stroke='#999'/>\n";
        os << "<text x='" << num(ox + pw / 2) << "' y='" << num(oy + 11)
           << "' font-size='9' text-anchor='middle' fill='#111'>" << scene.title << "</text>\n";
        for (const auto& c : scene.circles) {
            os << "<circle cx='" << num(sx(c.x)) << "' cy='" << num(sy(c.y)) << "' r='"
               << num(c.radius * pw) << "' stroke='" << c.color << "' fill='"
               << (c.filled ? c.color : std::string("none")) << "' fill-opacity='0.35'/>\n";
        }
        for (std::size_t pi = 0; pi < scene.paths.size(); ++pi) {
            const auto& pathline = scene.paths[pi];
            const char* color = kPalette[pi % kPaletteSize];
            os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.2' points='";
            for (const auto& [x, y] : pathline.points) os << num(sx(x)) << "," << num(sy(y)) << " ";
            os << "'/>\n";
        }
    }
    os << "</svg>\n";
    if (!os) throw IoError("failed writing plot: " + path.string());
}

}  // namespace skillforge::svg
