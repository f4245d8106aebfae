#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tangle {

struct PlotSeries {
    std::vector<double> xs;
    std::vector<double> ys;
    std::string color = "#1f77b4";
    double opacity = 1.0;
    double width = 1.0;
    std::string label;
};

// Minimal static line chart (axes, ticks, legend) written as an SVG file.
// Long series are decimated for file size; values are unaffected elsewhere.
void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

}  // namespace tangle
