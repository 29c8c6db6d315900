#include "calderon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace calderon::svg {

namespace {

const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& o) {
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = o.width - left - right, ph = o.height - top - bottom;
    auto tx = [&](double v) { return o.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return o.logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!o.logx || x > 0) && (!o.logy || y > 0);
    };

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!usable(s.x[k], s.y[k])) continue;
            x0 = std::min(x0, tx(s.x[k]));
            x1 = std::max(x1, tx(s.x[k]));
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + (y1 - ty(v)) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
       << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << o.width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(o.title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
        const double vx = o.logx ? std::pow(10.0, fx) : fx, vy = o.logy ? std::pow(10.0, fy) : fy;
        const double sx = left + pw * k / 4, sy = top + ph - ph * k / 4;
        os << "<text x=\"" << num(sx) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\" font-size=\"11\">"
           << tick_label(vx) << "</text>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
           << tick_label(vy) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << o.height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(o.xlabel) << "</text>\n";
    os << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 "
       << num(top + ph / 2) << ")\" text-anchor=\"middle\">" << escape(o.ylabel) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kColours[s % 8];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[s].x.size(); ++k)
            if (usable(series[s].x[k], series[s].y[k]))
                os << num(px(series[s].x[k])) << ',' << num(py(series[s].y[k])) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << num(left + 10) << "\" y=\"" << num(top + 16 + 15 * s) << "\" font-size=\"12\" fill=\""
           << colour << "\">" << escape(series[s].label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string field_plot(const Mesh& mesh, const std::vector<double>& v, const std::string& title, int size) {
    if (v.size() != mesh.num_triangles()) throw std::invalid_argument("field_plot: one value per triangle required");
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (vmax == 0.0) vmax = 1.0;
    const double r = mesh.boundary_scale(), margin = 30, scale = (size - 2 * margin) / (2 * r);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size + 20
       << "\" viewBox=\"0 0 " << size << ' ' << size + 20 << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << size / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << " (max |value| "
       << tick_label(vmax) << ")</text>\n";
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double s = std::clamp(v[t] / vmax, -1.0, 1.0);
        const int hi = 255, lo = static_cast<int>(std::lround(255 * (1 - std::abs(s))));
        char colour[8];
        std::snprintf(colour, sizeof colour, "#%02x%02x%02x", s > 0 ? hi : lo, lo, s < 0 ? hi : lo);
        os << "<polygon fill=\"" << colour << "\" stroke=\"" << colour << "\" stroke-width=\"0.3\" points=\"";
        for (int k : mesh.triangles()[t]) {
            const Point& p = mesh.vertices()[k];
            os << num(margin + (p.x + r) * scale) << ',' << num(20 + margin + (r - p.y) * scale) << ' ';
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

}  // namespace calderon::svg
