#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "cncfl/cli.hpp"

namespace cncfl::cli {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 80, kRight = 200, kTop = 30, kBottom = 60;
constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Tick step of 1, 2 or 5 times a power of ten giving about `target` ticks.
double tick_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (raw <= f * mag) return f * mag;
    return 10.0 * mag;
}

} // namespace

std::string render_svg(std::span<const PlotSeries> series, const std::string& x_label, const std::string& y_label) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };
    auto num = [](double v) { return format_number(v, 6); };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes and ticks.
    svg << "<g stroke=\"black\" fill=\"none\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph << "\"/>\n"
        << "</g>\n<g fill=\"black\">\n";
    const double xs = tick_step(x1 - x0, 6), ys = tick_step(y1 - y0, 6);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + xs * 1e-9; t += xs)
        svg << "<line x1=\"" << num(px(t)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(px(t)) << "\" y2=\""
            << kTop + ph + 5 << "\" stroke=\"black\"/><text x=\"" << num(px(t)) << "\" y=\"" << kTop + ph + 20
            << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + ys * 1e-9; t += ys)
        svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << kLeft << "\" y2=\"" << num(py(t))
            << "\" stroke=\"black\"/><text x=\"" << kLeft - 8 << "\" y=\"" << num(py(t) + 4)
            << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << escape(x_label)
        << "</text>\n"
        << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n</g>\n";

    // Series and legend.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPalette.size()];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[i].points.size(); ++k)
            svg << (k ? " " : "") << num(px(series[i].points[k].first)) << ',' << num(py(series[i].points[k].second));
        svg << "\"/>\n";
        const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
        svg << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 40 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << kLeft + pw + 45 << "\" y=\"" << ly + 4
            << "\">" << escape(series[i].label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace cncfl::cli
