#pragma once

#include <fstream>

#include "poresens/format.hpp"
#include "poresens/geometry.hpp"

namespace poresens {

struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Minimal line plot: axes, ticks, one polyline per series, legend. Enough
/// for parameter-sweep curves without a plotting dependency.
inline void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series,
                            const std::string& title, const std::string& xlabel,
                            const std::string& ylabel) {
    if (series.empty()) throw Error("svg: nothing to plot");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 <= x1) || !(y0 <= y1)) throw Error("svg: empty series");
    if (x1 == x0) {
        x0 -= 1;
        x1 += 1;
    }
    if (y1 == y0) {
        y0 -= 1;
        y1 += 1;
    }
    double ypad = 0.05 * (y1 - y0);
    y0 -= ypad;
    y1 += ypad;

    const double W = 720, H = 480, ml = 80, mr = 160, mt = 50, mb = 60;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ofstream os(path);
    if (!os) throw Error("svg: cannot open '" + path + "'");
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";
    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double x = x0 + i * (x1 - x0) / 5, y = y0 + i * (y1 - y0) / 5;
        char xs[32], ys[32];
        std::snprintf(xs, sizeof(xs), "%.4g", x);
        std::snprintf(ys, sizeof(ys), "%.4g", y);
        os << "<line x1=\"" << px(x) << "\" y1=\"" << H - mb << "\" x2=\"" << px(x) << "\" y2=\""
           << H - mb + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px(x) << "\" y=\"" << H - mb + 20
           << "\" text-anchor=\"middle\" font-size=\"11\">" << xs << "</text>\n";
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << ml << "\" y2=\"" << py(y)
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << ys << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15
       << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
       << "transform=\"rotate(-90 18 " << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";
    // series
    for (size_t s = 0; s < series.size(); ++s) {
        const char* col = colors[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.6\" points=\"";
        for (auto [x, y] : series[s].points) os << px(x) << "," << py(y) << " ";
        os << "\"/>\n";
        for (auto [x, y] : series[s].points)
            os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.6\" fill=\"" << col
               << "\"/>\n";
        double ly = mt + 18.0 * double(s);
        os << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 36 << "\" y2=\""
           << ly << "\" stroke=\"" << col << "\" stroke-width=\"1.6\"/>\n";
        os << "<text x=\"" << W - mr + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
           << series[s].name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace poresens
