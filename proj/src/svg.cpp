#include "skipscope/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace skipscope {

namespace {

constexpr double width = 640.0;
constexpr double height = 400.0;
constexpr double left = 64.0;
constexpr double right = 24.0;
constexpr double top = 40.0;
constexpr double bottom = 56.0;
constexpr std::array<const char*, 6> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string fixed(double v, int digits = 2)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& s)
{
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

} // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series)
{
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0.0;
        x1 = 1.0;
        y1 = 1.0;
    }
    if (x1 == x0) {
        x1 = x0 + 1.0;
    }
    if (!(y1 > y0)) {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    const auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
           fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fixed(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + escape(title) + "</text>\n";
    out += "<g stroke=\"#444\" stroke-width=\"1\">\n";
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
           fixed(top + ph) + "\"/>\n";
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
           fixed(top + ph) + "\"/>\n";
    out += "</g>\n";

    out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double yv = y0 + (y1 - y0) * i / 5.0;
        const double xv = x0 + (x1 - x0) * i / 5.0;
        out += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(sy(yv) + 4) + "\" text-anchor=\"end\">" +
               fixed(yv, 3) + "</text>\n";
        out += "<text x=\"" + fixed(sx(xv)) + "\" y=\"" + fixed(top + ph + 16) + "\" text-anchor=\"middle\">" +
               fixed(xv, 1) + "</text>\n";
    }
    out += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(height - 14) + "\" text-anchor=\"middle\">" +
           escape(x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fixed(top + ph / 2) + ")\">" + escape(y_label) + "</text>\n";
    out += "</g>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = palette[s % palette.size()];
        std::string pts;
        for (const auto& [x, y] : series[s].points) {
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += fixed(sx(x)) + "," + fixed(sy(y));
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts +
               "\"/>\n";
        const double ly = top + 8 + 16.0 * static_cast<double>(s);
        out += "<line x1=\"" + fixed(left + pw - 130) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(left + pw - 110) +
               "\" y2=\"" + fixed(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + fixed(left + pw - 104) + "\" y=\"" + fixed(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series[s].name) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace skipscope
