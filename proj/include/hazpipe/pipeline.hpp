#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hazpipe/annotations_io.hpp"
#include "hazpipe/changepoint.hpp"
#include "hazpipe/hazards.hpp"
#include "hazpipe/metrics.hpp"
#include "hazpipe/optical_flow.hpp"
#include "hazpipe/reaction.hpp"
#include "hazpipe/submission.hpp"

namespace hazpipe {

enum class ReactionInput { ObjectSize, OpticalFlow };
enum class EnsembleKind { Or, And, Mean };

struct ReactionStrategy {
    enum class Kind { ObjectSize, OpticalFlow, Baseline, Ensemble };
    Kind kind = Kind::Ensemble;
    EnsembleKind ensemble = EnsembleKind::Mean;
    std::vector<ReactionInput> inputs{ReactionInput::ObjectSize, ReactionInput::OpticalFlow};
    int baseline_min_window = 10;
    double baseline_slope_threshold = 0.0;

    bool needs_frames() const;
};

struct CaptionSettings {
    enum class Mode { Off, Replay, Live };
    Mode mode = Mode::Off;
    std::string url;         // live endpoint; HAZPIPE_CAPTION_URL overrides
    std::string cache_path;  // replay JSONL
    int attempts = 3;
    int backoff_ms = 1000;
    int crops = 5;
    int take = 5;
    int max_in_flight = 4;
};

struct PipelinePaths {
    std::string annotations;
    std::string frames_root;
    std::string ground_truth;
    std::string predictions;
};

struct PipelineConfig {
    PipelinePaths paths;
    CpdConfig cpd{CpdConfig::Mode::FixedK, 4, std::nullopt, 2, {}};
    FlowParams flow;
    ReactionStrategy reaction;
    HazardConfig hazards;
    CaptionSettings captions;
    std::string classifier_url;  // live predictions; HAZPIPE_CLASSIFY_URL overrides
    int submission_slots = 22;
    int jobs = 1;
    std::string videos_glob = "*";
};

/// Parse a JSON config; relative paths resolve against the file's directory.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& json_text, const std::string& base_dir);

struct RunResult {
    SubmissionTable table;
    std::optional<EvalReport> report;
    std::string submission_path;
    std::string eval_json_path;  // empty without ground truth
    std::string eval_csv_path;
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    const std::vector<VideoAnnotations>& videos() const { return videos_; }

    /// Signal CSVs (one per video and signal kind) into out_dir; optionally
    /// SVG charts with the detected breakpoints and per-pair flow-statistics
    /// CSVs. Returns the written paths.
    std::vector<std::string> run_signals(const std::string& out_dir, bool plots = false,
                                         bool flow_stats = false);

    /// Reaction CSVs per video into out_dir.
    std::vector<std::string> run_reaction(const std::string& out_dir);

    /// Full pipeline: submission.csv plus eval report when truth is given.
    RunResult run(const std::string& out_dir);

    /// Score an existing submission against the configured ground truth.
    EvalReport evaluate_table(const SubmissionTable& table) const;

    ReactionSeries reaction_for(const VideoAnnotations& video) const;
    HazardSelection hazards_for(const VideoAnnotations& video) const;

    /// hazards_for plus caption labels from the configured caption backend.
    HazardSelection captioned_hazards_for(const VideoAnnotations& video) const;

private:
    PipelineConfig config_;
    std::vector<VideoAnnotations> videos_;
    std::vector<GroundTruth> truths_;  // empty when no ground-truth path
    std::vector<ClassPrediction> predictions_;
    bool have_truth_ = false;

    FrameStore store_for(const VideoAnnotations& video) const;
    std::vector<ClassPrediction> predictions_for(const VideoAnnotations& video) const;
    MotionSeries signal_for(const VideoAnnotations& video, ReactionInput input) const;
    void attach_captions(const VideoAnnotations& video, HazardSelection& selection) const;
};

/// Score a submission table against parsed ground truth.
EvalReport evaluate_submission(const SubmissionTable& table,
                               const std::vector<GroundTruth>& truths);

}  // namespace hazpipe
