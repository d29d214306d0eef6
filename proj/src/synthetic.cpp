#include "hazpipe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "hazpipe/annotations_io.hpp"
#include "hazpipe/captions.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/hazards.hpp"
#include "hazpipe/image.hpp"
#include "hazpipe/image_io.hpp"
#include "hazpipe/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hazpipe {

namespace {

// splitmix64: small, stable, and independent of library distributions.
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }
};

struct Blob {
    double cx, cy, sigma, amplitude;
};

GrayImage render_background(int width, int height, const std::vector<Blob>& blobs) {
    GrayImage img(width, height, 0.5f);
    for (const auto& blob : blobs) {
        const int r = static_cast<int>(std::ceil(3.0 * blob.sigma));
        const int x0 = std::max(0, static_cast<int>(blob.cx) - r);
        const int x1 = std::min(width - 1, static_cast<int>(blob.cx) + r);
        const int y0 = std::max(0, static_cast<int>(blob.cy) - r);
        const int y1 = std::min(height - 1, static_cast<int>(blob.cy) + r);
        const double inv = 1.0 / (2.0 * blob.sigma * blob.sigma);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - blob.cx;
                const double dy = y - blob.cy;
                img.at(x, y) += static_cast<float>(blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv));
            }
        }
    }
    for (auto& v : img.values) v = std::clamp(v, 0.05f, 0.95f);
    return img;
}

void fill_rect(GrayImage& img, const BoundingBox& box, float value) {
    const int x0 = std::clamp(static_cast<int>(std::lround(box.x1)), 0, img.width - 1);
    const int x1 = std::clamp(static_cast<int>(std::lround(box.x2)) - 1, 0, img.width - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround(box.y1)), 0, img.height - 1);
    const int y1 = std::clamp(static_cast<int>(std::lround(box.y2)) - 1, 0, img.height - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) img.at(x, y) = value;
}

BoundingBox centered_box(double cx, double cy, double w, double h) {
    return {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
}

}  // namespace

SynthResult generate_synthetic(const std::string& out_dir, uint64_t seed,
                               const SynthOptions& options) {
    if (options.videos < 1 || options.frames < 20 || options.width < 64 || options.height < 64)
        throw ValidationError("synthetic: need >= 1 video, >= 20 frames, >= 64x64 frames");
    if (options.frame_format != "png" && options.frame_format != "pgm")
        throw ValidationError("synthetic: frame_format must be png or pgm");

    fs::create_directories(out_dir);
    const fs::path root(out_dir);
    const fs::path frames_root = root / "frames";
    fs::create_directories(frames_root);

    const std::vector<std::string> hazard_classes{"dog",  "deer",  "boar",
                                                  "goat", "llama", "ostrich"};

    std::vector<VideoAnnotations> videos;
    std::vector<GroundTruth> truths;
    std::vector<ClassPrediction> predictions;
    std::ostringstream caption_cache;

    for (int v = 0; v < options.videos; ++v) {
        Rng rng(seed * 1000003ULL + static_cast<uint64_t>(v));
        const int n = options.frames;
        const int w = options.width;
        const int h = options.height;
        const std::string video_id = "synth_v" + std::to_string(v);
        const std::string hazard_class = hazard_classes[v % hazard_classes.size()];
        const int reaction_frame = std::min(n - 10, n / 2 + 5 * (v % 3));
        const bool horizontal = v % 2 == 0;

        const std::string hz = "hz" + std::to_string(v);
        const std::string veh = "veh" + std::to_string(v);
        const std::string rock = "rock" + std::to_string(v);

        // Annotations: the hazard grows at the reaction frame and crosses the
        // frame; the vehicle drifts (whitelisted later); the rock never moves
        // (removed by the size filter later).
        VideoAnnotations ann;
        ann.video_id = video_id;
        ann.width = w;
        ann.height = h;
        ann.frames.resize(static_cast<size_t>(n));
        GroundTruth gt;
        gt.video_id = video_id;
        gt.reaction.assign(static_cast<size_t>(n), false);
        gt.hazard_tracks.assign(static_cast<size_t>(n), {});
        gt.hazard_classes.assign(static_cast<size_t>(n), {});

        for (int i = 0; i < n; ++i) {
            ann.frames[i].frame_index = i;
            const double progress = static_cast<double>(i) / (n - 1);

            const double hz_side = i < reaction_frame ? 40.0 : 56.0;
            const double hz_cx = 0.2 * w + 0.6 * w * progress;
            const double hz_cy = 0.5 * h + rng.uniform(-1.0, 1.0);
            ann.frames[i].detections.push_back(
                {i, hz, centered_box(hz_cx, hz_cy, hz_side, hz_side)});

            const double veh_w = 30.0 + rng.uniform(-0.5, 0.5);
            const double veh_cx = 0.2 * w + 0.3 * w * progress;
            ann.frames[i].detections.push_back(
                {i, veh, centered_box(veh_cx, 0.8 * h, veh_w, 20.0)});

            ann.frames[i].detections.push_back(
                {i, rock, centered_box(0.85 * w, 0.7 * h, 24.0, 24.0)});

            gt.reaction[i] = i >= reaction_frame;
            gt.hazard_tracks[i].insert(hz);
            gt.hazard_classes[i].insert(hazard_class);
        }

        // Class predictions for every (track, frame).
        for (int i = 0; i < n; ++i) {
            predictions.push_back({video_id, hz, i, {{hazard_class, 0.7}, {"cat", 0.2}}});
            predictions.push_back({video_id, veh, i, {{"bus", 0.8}, {"pickup truck", 0.1}}});
            predictions.push_back({video_id, rock, i, {{"rock", 0.5}, {"cloud", 0.3}}});
        }

        // Caption replay cache for the hazard track: five crops, two prompts.
        for (int rank = 1; rank <= 5; ++rank) {
            const std::string categories_text =
                hazard_class + " " + hazard_class + " brown animal road";
            const std::string sentence_text = hazard_class + " on the road ahead";
            caption_cache << json{{"key", replay_cache_key(video_id, hz, rank,
                                                           CaptionPrompt::Id::Categories)},
                                  {"text", categories_text}}
                                 .dump()
                          << "\n";
            caption_cache << json{{"key", replay_cache_key(video_id, hz, rank,
                                                           CaptionPrompt::Id::Sentence)},
                                  {"text", sentence_text}}
                                 .dump()
                          << "\n";
        }

        // Frames: a blob texture, static until the reaction frame, then
        // translating 2 px/frame; annotated objects drawn on top.
        const int max_offset = 2 * (n - 1 - reaction_frame);
        const int ext_w = w + (horizontal ? max_offset : 0);
        const int ext_h = h + (horizontal ? 0 : max_offset);
        std::vector<Blob> blobs;
        const int blob_count = std::max(40, ext_w * ext_h / 1200);
        blobs.reserve(static_cast<size_t>(blob_count));
        for (int bi = 0; bi < blob_count; ++bi) {
            blobs.push_back({rng.uniform(-20.0, ext_w + 20.0), rng.uniform(-20.0, ext_h + 20.0),
                             rng.uniform(5.0, 16.0), rng.uniform(-0.35, 0.35)});
        }
        const GrayImage background = render_background(ext_w, ext_h, blobs);

        const fs::path video_dir = frames_root / video_id;
        fs::create_directories(video_dir);
        for (int i = 0; i < n; ++i) {
            const int off = 2 * std::max(0, i - reaction_frame);
            GrayImage frame(w, h);
            for (int y = 0; y < h; ++y) {
                const int sy = horizontal ? y : y + off;
                const int sx0 = horizontal ? off : 0;
                const float* src = &background.values[static_cast<size_t>(sy) * ext_w + sx0];
                std::copy(src, src + w, &frame.values[static_cast<size_t>(y) * w]);
            }
            for (const auto& det : ann.frames[i].detections) {
                // Low contrast keeps the moving rectangles from dominating
                // the frame-level flow statistics.
                const float shade =
                    det.track_id == hz ? 0.35f : (det.track_id == veh ? 0.62f : 0.42f);
                fill_rect(frame, det.bbox, shade);
            }
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%06d.%s", i, options.frame_format.c_str());
            const std::string path = (video_dir / name).string();
            if (options.frame_format == "png")
                write_png(path, frame);
            else
                write_pgm(path, frame);
        }

        videos.push_back(std::move(ann));
        truths.push_back(std::move(gt));
    }

    SynthResult result;
    result.annotations_path = (root / "annotations.json").string();
    result.truth_path = (root / "truth.json").string();
    result.frames_root = frames_root.string();
    result.predictions_path = (root / "predictions.jsonl").string();
    result.caption_cache_path = (root / "captions.jsonl").string();
    result.config_path = (root / "config.json").string();

    {
        std::ofstream out(result.annotations_path);
        out << serialize_annotations(videos) << "\n";
    }
    {
        std::ofstream out(result.truth_path);
        out << serialize_ground_truth(truths) << "\n";
    }
    write_predictions_jsonl(predictions, result.predictions_path);
    {
        std::ofstream out(result.caption_cache_path);
        out << caption_cache.str();
    }

    // Ready-to-run config; paths are relative to the config file location.
    const json config{
        {"paths",
         {{"annotations", "annotations.json"},
          {"frames_root", "frames"},
          {"ground_truth", "truth.json"},
          {"predictions", "predictions.jsonl"}}},
        {"cpd",
         {{"mode", "penalized"}, {"beta", 2.0}, {"min_segment_size", 2}, {"gamma", "auto"}}},
        {"flow",
         {{"pyramid_scale", 0.5},
          {"levels", 3},
          {"window_size", 15},
          {"iterations", 3},
          {"poly_n", 5},
          {"poly_sigma", 1.1},
          {"pre_scale", 1.0}}},
        {"reaction",
         {{"strategy", "ensemble"},
          {"ensemble", "mean"},
          {"inputs", {"object_size", "optical_flow"}}}},
        {"hazards",
         {{"base", "all"}, {"filters", {"whitelist", "size"}}}},
        {"captions", {{"mode", "replay"}, {"cache", "captions.jsonl"}}},
        {"submission", {{"slots", 22}}},
        {"jobs", 2}};
    {
        std::ofstream out(result.config_path);
        out << config.dump(2) << "\n";
    }
    return result;
}

}  // namespace hazpipe
