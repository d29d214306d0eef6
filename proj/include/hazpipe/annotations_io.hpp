#pragma once

#include <string>
#include <vector>

#include "hazpipe/types.hpp"

namespace hazpipe {

/**
 * Parse the annotation JSON file:
 *   {"videos":[{"video_id":str,"width":int,"height":int,
 *               "frames":[{"frame_index":int,
 *                          "detections":[{"track_id":str,"bbox":[x1,y1,x2,y2]}]}]}]}
 * Frame indices absent from the file are materialized as empty frames so the
 * result covers 0..N-1 contiguously. Throws ValidationError naming the
 * offending video/frame/track on schema or invariant violations.
 */
std::vector<VideoAnnotations> parse_annotations(const std::string& path);
std::vector<VideoAnnotations> parse_annotations_text(const std::string& json_text);

std::string serialize_annotations(const std::vector<VideoAnnotations>& videos);

/// One tracklet per track id, detections ordered by frame; tracklets sorted
/// by track id. The tracklets partition the video's detections.
std::vector<Tracklet> build_tracklets(const VideoAnnotations& video);

/**
 * Parse the ground-truth JSON file:
 *   {"videos":[{"video_id":str,"reaction":[bool,...],
 *               "hazards":[{"frame_index":int,"tracks":[str],"classes":[str]}]}]}
 * and validate it against annotations: reaction length must equal the video's
 * frame count; hazard track ids unknown to the annotations are kept but
 * reported through `warnings`.
 */
std::vector<GroundTruth> parse_ground_truth(const std::string& path,
                                            const std::vector<VideoAnnotations>& annotations,
                                            std::vector<std::string>* warnings = nullptr);
std::vector<GroundTruth> parse_ground_truth_text(const std::string& json_text,
                                                 const std::vector<VideoAnnotations>& annotations,
                                                 std::vector<std::string>* warnings = nullptr);

std::string serialize_ground_truth(const std::vector<GroundTruth>& truths);

}  // namespace hazpipe
