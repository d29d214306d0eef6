#include "hazpipe/plot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

std::string signal_svg(const MotionSeries& series, const std::vector<int>& breakpoints, int width,
                       int height) {
    const int margin = 24;
    const int plot_w = width - 2 * margin;
    const int plot_h = height - 2 * margin;
    const int n = series.size();

    double lo = 0.0, hi = 1.0;
    if (n > 0) {
        const auto [mn, mx] = std::minmax_element(series.values.begin(), series.values.end());
        lo = *mn;
        hi = *mx;
        if (hi == lo) hi = lo + 1.0;
    }

    auto px = [&](int i) {
        return margin + (n > 1 ? static_cast<double>(i) / (n - 1) * plot_w : 0.0);
    };
    auto py = [&](double v) { return margin + (1.0 - (v - lo) / (hi - lo)) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << margin << "\" y=\"14\" font-size=\"11\">" << series.video_id << " / "
        << signal_kind_name(series.kind) << "</text>\n";

    for (int bp : breakpoints) {
        if (bp < 0 || bp >= n) continue;
        svg << "  <line x1=\"" << px(bp) << "\" y1=\"" << margin << "\" x2=\"" << px(bp)
            << "\" y2=\"" << margin + plot_h
            << "\" stroke=\"red\" stroke-width=\"1\" stroke-dasharray=\"4 2\"/>\n";
    }

    if (n > 0) {
        svg << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (int i = 0; i < n; ++i) {
            if (i) svg << " ";
            svg << format_double(px(i)) << "," << format_double(py(series.values[i]));
        }
        svg << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_signal_svg(const MotionSeries& series, const std::vector<int>& breakpoints,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write SVG: " + path);
    out << signal_svg(series, breakpoints);
    if (!out) throw IoError("short write: " + path);
}

}  // namespace hazpipe
