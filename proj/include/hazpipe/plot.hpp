#pragma once

#include <string>
#include <vector>

#include "hazpipe/signals.hpp"

namespace hazpipe {

/// Minimal SVG line chart of one series with vertical breakpoint markers.
std::string signal_svg(const MotionSeries& series, const std::vector<int>& breakpoints,
                       int width = 800, int height = 240);

void write_signal_svg(const MotionSeries& series, const std::vector<int>& breakpoints,
                      const std::string& path);

}  // namespace hazpipe
