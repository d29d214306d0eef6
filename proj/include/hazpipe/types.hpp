#pragma once

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hazpipe {

/**
 * Axis-aligned box in image coordinates, origin top-left. Coordinates are
 * continuous; x2 >= x1 and y2 >= y1 for a valid box.
 */
struct BoundingBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return std::abs(x2 - x1) * std::abs(y2 - y1); }
    std::pair<double, double> center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }
    bool valid() const { return x2 >= x1 && y2 >= y1; }
};

struct Detection {
    int frame_index = 0;
    std::string track_id;
    BoundingBox bbox;
};

struct FrameAnnotations {
    int frame_index = 0;
    std::vector<Detection> detections;  // may be empty
};

/**
 * All annotations of one video. `frames` covers frame indices 0..N-1
 * contiguously; frames absent from the source file are materialized empty.
 */
struct VideoAnnotations {
    std::string video_id;
    int width = 0;
    int height = 0;
    std::vector<FrameAnnotations> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// One track's detections, ordered by strictly increasing frame index.
struct Tracklet {
    std::string track_id;
    std::vector<Detection> detections;

    const Detection& first() const { return detections.front(); }
    const Detection& last() const { return detections.back(); }
};

/**
 * Per-frame labels of one video: the driver-reaction step series, the set of
 * hazardous track ids, and the set of hazard class strings. All three are
 * indexed by frame and have length N.
 */
struct GroundTruth {
    std::string video_id;
    std::vector<bool> reaction;
    std::vector<std::set<std::string>> hazard_tracks;
    std::vector<std::set<std::string>> hazard_classes;

    int frame_count() const { return static_cast<int>(reaction.size()); }
};

}  // namespace hazpipe
