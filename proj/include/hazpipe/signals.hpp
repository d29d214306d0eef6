#pragma once

#include <string>
#include <vector>

#include "hazpipe/types.hpp"

namespace hazpipe {

enum class SignalKind { ObjectSize, OpticalFlow, MedianDistance };

std::string signal_kind_name(SignalKind kind);

/// One finite scalar per frame of a video.
struct MotionSeries {
    std::string video_id;
    SignalKind kind = SignalKind::ObjectSize;
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
};

/// Per frame, the sum of bounding-box areas of every detection present.
MotionSeries object_size_series(const VideoAnnotations& video);

/// (v - min) / (max - min) elementwise; a constant series maps to all zeros.
MotionSeries min_max_normalize(const MotionSeries& series);

/**
 * For each frame i >= 1, take every bbox center in frame i, find its nearest
 * bbox center in frame i-1, and report the median of those minimum distances.
 * Frame 0 and frames where either side has no detections yield 0.
 */
MotionSeries median_min_distance_series(const VideoAnnotations& video);

/// CSV export/import, header "frame_index,value".
void write_series_csv(const MotionSeries& series, const std::string& path);
MotionSeries read_series_csv(const std::string& path, const std::string& video_id, SignalKind kind);

}  // namespace hazpipe
