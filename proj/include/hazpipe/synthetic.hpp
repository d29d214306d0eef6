#pragma once

#include <cstdint>
#include <string>

namespace hazpipe {

struct SynthOptions {
    int videos = 2;
    int frames = 60;
    int width = 320;
    int height = 240;
    std::string frame_format = "png";  // "png" or "pgm"
};

struct SynthResult {
    std::string annotations_path;
    std::string truth_path;
    std::string frames_root;
    std::string predictions_path;
    std::string caption_cache_path;
    std::string config_path;
};

/**
 * Deterministic mini-dataset: per video a textured background that starts
 * static and translates 2 px/frame after the planted reaction frame, a
 * growing hazard track, a whitelisted vehicle track, and a stationary
 * distractor, plus matching ground truth, class predictions, a caption
 * replay cache, and a ready-to-run pipeline config.
 */
SynthResult generate_synthetic(const std::string& out_dir, uint64_t seed,
                               const SynthOptions& options = {});

}  // namespace hazpipe
