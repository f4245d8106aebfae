#include "tangle/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tangle {

namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 42.0, kBottom = 52.0;
constexpr std::size_t kMaxPointsPerSeries = 800;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Round tick spacing to a 1/2/5 ladder.
double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    if (r < 1.5) return mag;
    if (r < 3.5) return 2.0 * mag;
    if (r < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
    double x_min = std::numeric_limits<double>::max(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const PlotSeries& s : series) {
        for (double x : s.xs) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
        }
        for (double y : s.ys) {
            if (!std::isfinite(y)) continue;
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (!(x_min <= x_max) || !(y_min <= y_max)) {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    y_min = std::min(y_min, 0.0);
    y_max += 0.05 * (y_max - y_min);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot file " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // axes + ticks
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\"/>\n</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    const double x_step = nice_step(x_max - x_min);
    for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-9; x += x_step) {
        out << "<line x1=\"" << px(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << px(x)
            << "\" y2=\"" << kTop + plot_h + 4 << "\" stroke=\"#333\"/>"
            << "<text x=\"" << px(x) << "\" y=\"" << kTop + plot_h + 17
            << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
    }
    const double y_step = nice_step(y_max - y_min);
    for (double y = std::ceil(y_min / y_step) * y_step; y <= y_max + 1e-9; y += y_step) {
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << kLeft
            << "\" y2=\"" << py(y) << "\" stroke=\"#333\"/>"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(y) + 4
            << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n"
            << "<line x1=\"" << kLeft << "\" y1=\"" << py(y) << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << py(y) << "\" stroke=\"#eee\"/>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
        << "<text x=\"16\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n</g>\n";

    for (const PlotSeries& s : series) {
        if (s.xs.size() != s.ys.size() || s.xs.empty()) continue;
        const std::size_t stride = std::max<std::size_t>(1, s.xs.size() / kMaxPointsPerSeries);
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-opacity=\""
            << s.opacity << "\" stroke-width=\"" << s.width << "\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); i += stride) {
            if (!std::isfinite(s.ys[i])) continue;
            out << fmt(px(s.xs[i])) << ',' << fmt(py(s.ys[i])) << ' ';
        }
        if (!std::isfinite(s.ys.back())) {
        } else if ((s.xs.size() - 1) % stride != 0) {
            out << fmt(px(s.xs.back())) << ',' << fmt(py(s.ys.back()));
        }
        out << "\"/>\n";
    }

    // legend for labeled series
    double ly = kTop + 8.0;
    for (const PlotSeries& s : series) {
        if (s.label.empty()) continue;
        out << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + plot_w - 120 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>"
            << "<text x=\"" << kLeft + plot_w - 112 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        ly += 18.0;
    }
    out << "</svg>\n";
}

}  // namespace tangle
