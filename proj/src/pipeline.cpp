#include "hazpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hazpipe/captions.hpp"
#include "hazpipe/classifier_client.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/plot.hpp"
#include "hazpipe/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hazpipe {

bool ReactionStrategy::needs_frames() const {
    if (kind == Kind::OpticalFlow) return true;
    if (kind != Kind::Ensemble) return false;
    return std::find(inputs.begin(), inputs.end(), ReactionInput::OpticalFlow) != inputs.end();
}

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

const char* env_or_null(const char* name) { return std::getenv(name); }

ReactionInput parse_reaction_input(const std::string& name) {
    if (name == "object_size") return ReactionInput::ObjectSize;
    if (name == "optical_flow") return ReactionInput::OpticalFlow;
    throw ValidationError("config: unknown reaction input \"" + name + "\"");
}

// Run fn(0..n-1) on a bounded pool; exceptions resurface on the caller.
void parallel_for_index(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    workers.reserve(static_cast<size_t>(jobs));
    for (int j = 0; j < jobs; ++j) {
        workers.push_back(std::async(std::launch::async, [&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        }));
    }
    for (auto& w : workers) w.get();  // rethrows the first failure
}

}  // namespace

PipelineConfig parse_config_text(const std::string& json_text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    PipelineConfig config;

    const auto paths = doc.value("paths", json::object());
    config.paths.annotations = resolve_path(base_dir, paths.value("annotations", std::string{}));
    config.paths.frames_root = resolve_path(base_dir, paths.value("frames_root", std::string{}));
    config.paths.ground_truth = resolve_path(base_dir, paths.value("ground_truth", std::string{}));
    config.paths.predictions = resolve_path(base_dir, paths.value("predictions", std::string{}));

    const auto cpd = doc.value("cpd", json::object());
    const std::string mode = cpd.value("mode", std::string{"fixed"});
    if (mode == "fixed")
        config.cpd.mode = CpdConfig::Mode::FixedK;
    else if (mode == "penalized")
        config.cpd.mode = CpdConfig::Mode::Penalized;
    else
        throw ValidationError("config: cpd.mode must be fixed or penalized, got \"" + mode + "\"");
    config.cpd.k = cpd.value("k", 4);
    config.cpd.min_segment_size = cpd.value("min_segment_size", 2);
    if (cpd.contains("beta") && !cpd["beta"].is_string())
        config.cpd.beta = cpd["beta"].get<double>();
    if (cpd.contains("gamma") && !cpd["gamma"].is_string())
        config.cpd.kernel.gamma = cpd["gamma"].get<double>();

    const auto flow = doc.value("flow", json::object());
    config.flow.pyramid_scale = flow.value("pyramid_scale", config.flow.pyramid_scale);
    config.flow.levels = flow.value("levels", config.flow.levels);
    config.flow.window_size = flow.value("window_size", config.flow.window_size);
    config.flow.iterations = flow.value("iterations", config.flow.iterations);
    config.flow.poly_n = flow.value("poly_n", config.flow.poly_n);
    config.flow.poly_sigma = flow.value("poly_sigma", config.flow.poly_sigma);
    config.flow.pre_scale = flow.value("pre_scale", config.flow.pre_scale);
    config.flow.validate();

    const auto reaction = doc.value("reaction", json::object());
    const std::string strategy = reaction.value("strategy", std::string{"ensemble"});
    if (strategy == "object_size")
        config.reaction.kind = ReactionStrategy::Kind::ObjectSize;
    else if (strategy == "optical_flow")
        config.reaction.kind = ReactionStrategy::Kind::OpticalFlow;
    else if (strategy == "baseline")
        config.reaction.kind = ReactionStrategy::Kind::Baseline;
    else if (strategy == "ensemble")
        config.reaction.kind = ReactionStrategy::Kind::Ensemble;
    else
        throw ValidationError("config: unknown reaction.strategy \"" + strategy + "\"");
    const std::string ensemble = reaction.value("ensemble", std::string{"mean"});
    if (ensemble == "or")
        config.reaction.ensemble = EnsembleKind::Or;
    else if (ensemble == "and")
        config.reaction.ensemble = EnsembleKind::And;
    else if (ensemble == "mean")
        config.reaction.ensemble = EnsembleKind::Mean;
    else
        throw ValidationError("config: reaction.ensemble must be or/and/mean");
    if (reaction.contains("inputs")) {
        config.reaction.inputs.clear();
        for (const auto& input : reaction["inputs"])
            config.reaction.inputs.push_back(parse_reaction_input(input.get<std::string>()));
        if (config.reaction.inputs.empty())
            throw ValidationError("config: reaction.inputs must not be empty");
    }
    config.reaction.baseline_min_window = reaction.value("min_window", 10);
    config.reaction.baseline_slope_threshold = reaction.value("slope_threshold", 0.0);

    const auto hazards = doc.value("hazards", json::object());
    const std::string base = hazards.value("base", std::string{"all"});
    if (base == "all")
        config.hazards.base = HazardConfig::Base::AllTracks;
    else if (base == "nearest_k")
        config.hazards.base = HazardConfig::Base::NearestK;
    else
        throw ValidationError("config: hazards.base must be all or nearest_k");
    config.hazards.k = hazards.value("k", 1);
    for (const auto& filter : hazards.value("filters", json::array())) {
        const std::string name = filter.get<std::string>();
        if (name == "whitelist")
            config.hazards.whitelist_enabled = true;
        else if (name == "size")
            config.hazards.size_filter_enabled = true;
        else
            throw ValidationError("config: unknown hazard filter \"" + name + "\"");
    }
    if (hazards.contains("whitelist")) {
        std::vector<std::string> labels;
        for (const auto& label : hazards["whitelist"]) labels.push_back(label.get<std::string>());
        config.hazards.whitelist = Whitelist::from_labels(labels);
    }
    const std::string comparator = hazards.value("trajectory_comparator", std::string{"max"});
    config.hazards.comparator =
        comparator == "min" ? TrajectoryComparator::Min : TrajectoryComparator::Max;
    const std::string box_stat = hazards.value("trajectory_box", std::string{"mean"});
    config.hazards.box_stat = box_stat == "max" ? TrajectoryBoxStat::Max : TrajectoryBoxStat::Mean;

    const auto captions = doc.value("captions", json::object());
    const std::string caption_mode = captions.value("mode", std::string{"off"});
    if (caption_mode == "off")
        config.captions.mode = CaptionSettings::Mode::Off;
    else if (caption_mode == "replay")
        config.captions.mode = CaptionSettings::Mode::Replay;
    else if (caption_mode == "live")
        config.captions.mode = CaptionSettings::Mode::Live;
    else
        throw ValidationError("config: captions.mode must be off/replay/live");
    config.captions.url = captions.value("url", std::string{});
    config.captions.cache_path = resolve_path(base_dir, captions.value("cache", std::string{}));
    config.captions.attempts = captions.value("attempts", 3);
    config.captions.backoff_ms = captions.value("backoff_ms", 1000);
    config.captions.max_in_flight = captions.value("max_in_flight", 4);

    config.classifier_url = doc.value("classifier_url", std::string{});
    config.submission_slots = doc.value("submission", json::object()).value("slots", 22);
    config.jobs = doc.value("jobs", 1);
    config.videos_glob = doc.value("videos", std::string{"*"});

    if (const char* url = env_or_null("HAZPIPE_CAPTION_URL")) config.captions.url = url;
    if (const char* url = env_or_null("HAZPIPE_CLASSIFY_URL")) config.classifier_url = url;
    return config;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), fs::path(path).parent_path().string());
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    if (config_.paths.annotations.empty())
        throw ValidationError("config: paths.annotations is required");
    auto all = parse_annotations(config_.paths.annotations);
    if (!config_.paths.ground_truth.empty()) {
        std::vector<std::string> warnings;
        auto truths = parse_ground_truth(config_.paths.ground_truth, all, &warnings);
        for (const auto& warning : warnings) std::fprintf(stderr, "warning: %s\n", warning.c_str());
        for (auto& truth : truths) {
            if (glob_match(config_.videos_glob, truth.video_id))
                truths_.push_back(std::move(truth));
        }
        have_truth_ = true;
    }
    for (auto& video : all) {
        if (glob_match(config_.videos_glob, video.video_id)) videos_.push_back(std::move(video));
    }
    if (!config_.paths.predictions.empty())
        predictions_ = parse_predictions_jsonl(config_.paths.predictions);
}

FrameStore Pipeline::store_for(const VideoAnnotations& video) const {
    if (config_.paths.frames_root.empty())
        throw ValidationError("video " + video.video_id +
                              ": frames are required but paths.frames_root is not configured");
    const std::string dir = (fs::path(config_.paths.frames_root) / video.video_id).string();
    return FrameStore(video.video_id, dir, video.width, video.height);
}

std::vector<ClassPrediction> Pipeline::predictions_for(const VideoAnnotations& video) const {
    std::vector<ClassPrediction> out;
    for (const auto& pred : predictions_) {
        if (pred.video_id == video.video_id) out.push_back(pred);
    }
    return out;
}

MotionSeries Pipeline::signal_for(const VideoAnnotations& video, ReactionInput input) const {
    if (input == ReactionInput::ObjectSize)
        return min_max_normalize(object_size_series(video));
    return motion_score_series(store_for(video), config_.flow);
}

ReactionSeries Pipeline::reaction_for(const VideoAnnotations& video) const {
    const int n = video.frame_count();
    auto detect_on = [&](ReactionInput input) {
        const MotionSeries series = signal_for(video, input);
        const auto breakpoints = config_.cpd.detect(series.values);
        return step_from_breakpoint(first_breakpoint(breakpoints), n, video.video_id);
    };

    switch (config_.reaction.kind) {
        case ReactionStrategy::Kind::ObjectSize:
            return detect_on(ReactionInput::ObjectSize);
        case ReactionStrategy::Kind::OpticalFlow:
            return detect_on(ReactionInput::OpticalFlow);
        case ReactionStrategy::Kind::Baseline:
            return baseline_slope_rule(median_min_distance_series(video),
                                       config_.reaction.baseline_min_window,
                                       config_.reaction.baseline_slope_threshold);
        case ReactionStrategy::Kind::Ensemble:
            break;
    }

    std::vector<ReactionSeries> parts;
    parts.reserve(config_.reaction.inputs.size());
    for (ReactionInput input : config_.reaction.inputs) parts.push_back(detect_on(input));
    switch (config_.reaction.ensemble) {
        case EnsembleKind::Or: return ensemble_or(parts);
        case EnsembleKind::And: return ensemble_and(parts);
        case EnsembleKind::Mean: return ensemble_mean_position(parts);
    }
    throw ValidationError("unreachable ensemble kind");
}

HazardSelection Pipeline::hazards_for(const VideoAnnotations& video) const {
    std::vector<ClassPrediction> preds;
    if (config_.hazards.whitelist_enabled) {
        if (!config_.paths.predictions.empty()) {
            preds = predictions_for(video);
        } else if (!config_.classifier_url.empty()) {
            ClassifierClient client(config_.classifier_url);
            const FrameStore store = store_for(video);
            preds = client.classify_video(video, store);
        } else {
            throw ValidationError(
                "hazards: the whitelist filter needs paths.predictions or a classifier_url");
        }
    }
    return select_hazards(video, config_.hazards, preds);
}

HazardSelection Pipeline::captioned_hazards_for(const VideoAnnotations& video) const {
    HazardSelection selection = hazards_for(video);
    attach_captions(video, selection);
    return selection;
}

void Pipeline::attach_captions(const VideoAnnotations& video, HazardSelection& selection) const {
    if (config_.captions.mode == CaptionSettings::Mode::Off) return;

    std::unique_ptr<CaptionBackend> backend;
    if (config_.captions.mode == CaptionSettings::Mode::Replay) {
        if (config_.captions.cache_path.empty())
            throw ValidationError("captions: replay mode needs captions.cache");
        backend = std::make_unique<ReplayCaptionBackend>(config_.captions.cache_path);
    } else {
        if (config_.captions.url.empty())
            throw ValidationError(
                "captions: live mode needs captions.url or HAZPIPE_CAPTION_URL");
        backend = std::make_unique<HttpCaptionBackend>(config_.captions.url,
                                                       config_.captions.attempts,
                                                       config_.captions.backoff_ms);
    }

    std::set<std::string> selected;
    for (const auto& frame : selection.per_frame)
        for (const auto& entry : frame) selected.insert(entry.track_id);
    if (selected.empty()) return;

    std::map<std::string, Tracklet> tracklets;
    for (auto& t : build_tracklets(video)) tracklets.emplace(t.track_id, std::move(t));
    const FrameStore store = store_for(video);

    // Caption each selected track; backend concurrency is bounded separately
    // from the per-video worker pool.
    std::vector<std::string> tracks(selected.begin(), selected.end());
    std::map<std::string, std::string> captions;
    std::mutex mutex;
    std::counting_semaphore<64> gate(std::clamp(config_.captions.max_in_flight, 1, 64));
    parallel_for_index(static_cast<int>(tracks.size()),
                       std::min(config_.captions.max_in_flight, 8), [&](int idx) {
        const std::string& track_id = tracks[static_cast<size_t>(idx)];
        const auto crops =
            select_largest_crops(tracklets.at(track_id), store, config_.captions.crops);
        gate.acquire();
        std::vector<RawCaption> raw;
        try {
            raw = caption_crops(video.video_id, track_id, crops, *backend,
                                default_prompts());
        } catch (...) {
            gate.release();
            throw;
        }
        gate.release();
        const AggregatedCaption agg = aggregate_words(raw, config_.captions.take);
        std::lock_guard<std::mutex> lock(mutex);
        captions[track_id] = agg.joined;
    });

    for (auto& frame : selection.per_frame) {
        for (auto& entry : frame) {
            const auto it = captions.find(entry.track_id);
            if (it != captions.end() && !it->second.empty()) entry.label = it->second;
        }
    }
}

std::vector<std::string> Pipeline::run_signals(const std::string& out_dir, bool plots,
                                               bool flow_stats) {
    fs::create_directories(out_dir);

    std::vector<ReactionInput> kinds;
    if (config_.reaction.kind == ReactionStrategy::Kind::ObjectSize) {
        kinds = {ReactionInput::ObjectSize};
    } else if (config_.reaction.kind == ReactionStrategy::Kind::OpticalFlow) {
        kinds = {ReactionInput::OpticalFlow};
    } else if (config_.reaction.kind == ReactionStrategy::Kind::Ensemble) {
        kinds = config_.reaction.inputs;
    }

    std::vector<std::vector<std::string>> written(videos_.size());
    parallel_for_index(static_cast<int>(videos_.size()), config_.jobs, [&](int vi) {
        const auto& video = videos_[static_cast<size_t>(vi)];
        if (config_.reaction.kind == ReactionStrategy::Kind::Baseline) {
            const MotionSeries series = median_min_distance_series(video);
            const std::string path =
                (fs::path(out_dir) / (video.video_id + "_median_distance.csv")).string();
            write_series_csv(series, path);
            written[vi].push_back(path);
            return;
        }
        for (ReactionInput input : kinds) {
            const MotionSeries series = signal_for(video, input);
            const std::string stem = video.video_id + "_" + signal_kind_name(series.kind);
            const std::string path = (fs::path(out_dir) / (stem + ".csv")).string();
            write_series_csv(series, path);
            written[vi].push_back(path);
            if (plots) {
                const auto breakpoints = config_.cpd.detect(series.values);
                const std::string svg = (fs::path(out_dir) / (stem + ".svg")).string();
                write_signal_svg(series, breakpoints, svg);
                written[vi].push_back(svg);
            }
            if (flow_stats && input == ReactionInput::OpticalFlow) {
                const auto stats = flow_stats_series(store_for(video), config_.flow);
                const std::string stats_path =
                    (fs::path(out_dir) / (stem + "_stats.csv")).string();
                write_flow_stats_csv(stats, stats_path);
                written[vi].push_back(stats_path);
            }
        }
    });

    std::vector<std::string> out;
    for (auto& paths : written)
        for (auto& path : paths) out.push_back(std::move(path));
    return out;
}

std::vector<std::string> Pipeline::run_reaction(const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> written(videos_.size());
    parallel_for_index(static_cast<int>(videos_.size()), config_.jobs, [&](int vi) {
        const auto& video = videos_[static_cast<size_t>(vi)];
        const ReactionSeries series = reaction_for(video);
        const std::string path = (fs::path(out_dir) / (video.video_id + "_reaction.csv")).string();
        write_reaction_csv(series, path);
        written[vi] = path;
    });
    return written;
}

RunResult Pipeline::run(const std::string& out_dir) {
    fs::create_directories(out_dir);

    struct VideoOutput {
        ReactionSeries reaction;
        HazardSelection hazards;
    };
    std::vector<VideoOutput> outputs(videos_.size());
    parallel_for_index(static_cast<int>(videos_.size()), config_.jobs, [&](int vi) {
        const auto& video = videos_[static_cast<size_t>(vi)];
        VideoOutput out;
        out.reaction = reaction_for(video);
        out.hazards = hazards_for(video);
        attach_captions(video, out.hazards);
        outputs[vi] = std::move(out);
    });

    RunResult result;
    result.table.slots = config_.submission_slots;
    for (size_t vi = 0; vi < videos_.size(); ++vi) {
        const auto& video = videos_[vi];
        const auto& out = outputs[vi];
        for (int i = 0; i < video.frame_count(); ++i) {
            SubmissionRow row;
            row.driver_state_changed = out.reaction.at(i);
            for (const auto& entry : out.hazards.per_frame[i]) {
                if (static_cast<int>(row.hazards.size()) >= config_.submission_slots) break;
                row.hazards.emplace_back(entry.track_id, entry.label);
            }
            result.table.rows.emplace(std::make_pair(video.video_id, i), std::move(row));
        }
    }

    result.submission_path = (fs::path(out_dir) / "submission.csv").string();
    write_submission(result.table, result.submission_path);

    if (have_truth_) {
        result.report = evaluate_submission(result.table, truths_);
        result.eval_json_path = (fs::path(out_dir) / "eval.json").string();
        result.eval_csv_path = (fs::path(out_dir) / "eval.csv").string();
        std::ofstream jout(result.eval_json_path);
        jout << eval_report_json(*result.report) << "\n";
        std::ofstream cout_(result.eval_csv_path);
        cout_ << eval_report_csv(*result.report);
    }
    return result;
}

EvalReport Pipeline::evaluate_table(const SubmissionTable& table) const {
    if (!have_truth_) throw ValidationError("eval: paths.ground_truth is not configured");
    return evaluate_submission(table, truths_);
}

EvalReport evaluate_submission(const SubmissionTable& table,
                               const std::vector<GroundTruth>& truths) {
    std::vector<VideoEval> evals;
    for (const auto& truth : truths) {
        const int n = truth.frame_count();
        std::vector<bool> reaction(static_cast<size_t>(n), false);
        std::vector<std::set<std::string>> tracks(static_cast<size_t>(n));
        std::vector<std::set<std::string>> names(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto it = table.rows.find({truth.video_id, i});
            if (it == table.rows.end())
                throw ValidationError("submission is missing row " + truth.video_id + "_" +
                                      std::to_string(i));
            reaction[i] = it->second.driver_state_changed;
            for (const auto& [track, name] : it->second.hazards) {
                tracks[i].insert(track);
                if (!name.empty()) names[i].insert(name);
            }
        }
        VideoEval eval;
        eval.video_id = truth.video_id;
        eval.acc.reaction = reaction_accuracy(reaction, truth.reaction);
        eval.acc.detection = detection_accuracy(tracks, truth.hazard_tracks);
        eval.acc.classification = classification_accuracy(names, truth.hazard_classes);
        eval.acc.macro =
            macro_accuracy(eval.acc.reaction, eval.acc.detection, eval.acc.classification);
        evals.push_back(std::move(eval));
    }
    return combine_reports(std::move(evals));
}

}  // namespace hazpipe
