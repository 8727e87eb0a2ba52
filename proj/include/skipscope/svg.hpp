#pragma once

#include <string>
#include <utility>
#include <vector>

namespace skipscope {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

// Static line chart with a fixed style; identical input gives identical bytes.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

} // namespace skipscope
