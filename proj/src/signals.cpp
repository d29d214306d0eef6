#include "hazpipe/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

std::string signal_kind_name(SignalKind kind) {
    switch (kind) {
        case SignalKind::ObjectSize: return "object_size";
        case SignalKind::OpticalFlow: return "optical_flow";
        case SignalKind::MedianDistance: return "median_distance";
    }
    return "unknown";
}

MotionSeries object_size_series(const VideoAnnotations& video) {
    MotionSeries out{video.video_id, SignalKind::ObjectSize, {}};
    out.values.reserve(video.frames.size());
    for (const auto& frame : video.frames) {
        double total = 0.0;
        for (const auto& det : frame.detections) total += det.bbox.area();
        out.values.push_back(total);
    }
    return out;
}

MotionSeries min_max_normalize(const MotionSeries& series) {
    if (series.values.empty())
        throw ValidationError("min_max_normalize: empty series for video " + series.video_id);
    const auto [mn_it, mx_it] = std::minmax_element(series.values.begin(), series.values.end());
    const double mn = *mn_it, mx = *mx_it;
    MotionSeries out{series.video_id, series.kind, {}};
    out.values.reserve(series.values.size());
    if (mx == mn) {
        out.values.assign(series.values.size(), 0.0);  // flat signal carries no change evidence
        return out;
    }
    const double range = mx - mn;
    for (double v : series.values) out.values.push_back((v - mn) / range);
    return out;
}

MotionSeries median_min_distance_series(const VideoAnnotations& video) {
    MotionSeries out{video.video_id, SignalKind::MedianDistance, {}};
    const int n = video.frame_count();
    out.values.assign(static_cast<size_t>(n), 0.0);
    for (int i = 1; i < n; ++i) {
        const auto& cur = video.frames[i].detections;
        const auto& prev = video.frames[i - 1].detections;
        if (cur.empty() || prev.empty()) continue;
        std::vector<double> minima;
        minima.reserve(cur.size());
        for (const auto& det : cur) {
            const auto [cx, cy] = det.bbox.center();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& pdet : prev) {
                const auto [px, py] = pdet.bbox.center();
                best = std::min(best, std::hypot(cx - px, cy - py));
            }
            minima.push_back(best);
        }
        out.values[i] = median(std::move(minima));
    }
    return out;
}

void write_series_csv(const MotionSeries& series, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw IoError("cannot write series CSV: " + path);
    outf << "frame_index,value\n";
    for (int i = 0; i < series.size(); ++i)
        outf << i << "," << format_double(series.values[i]) << "\n";
    if (!outf) throw IoError("short write: " + path);
}

MotionSeries read_series_csv(const std::string& path, const std::string& video_id, SignalKind kind) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "frame_index,value")
        throw ValidationError(path + ": expected header \"frame_index,value\"");
    MotionSeries out{video_id, kind, {}};
    int expected = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ss(line);
        int idx;
        char comma;
        double value;
        if (!(ss >> idx >> comma >> value) || comma != ',')
            throw ValidationError(path + ": malformed row \"" + line + "\"");
        if (idx != expected)
            throw ValidationError(path + ": frame indices must be contiguous from 0");
        if (!std::isfinite(value))
            throw ValidationError(path + ": non-finite value at frame " + std::to_string(idx));
        out.values.push_back(value);
        ++expected;
    }
    return out;
}

}  // namespace hazpipe
