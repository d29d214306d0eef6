#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazpipe/errors.hpp"
#include "hazpipe/pipeline.hpp"
#include "hazpipe/submission.hpp"
#include "hazpipe/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;

struct CommonArgs {
    std::string config_path;
    std::string videos_glob;
    std::string out_dir = "out";
    int jobs = 0;
    std::string strategy;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool wants_config = true) {
    if (wants_config)
        cmd->add_option("--config", args.config_path, "Pipeline config JSON")->required();
    cmd->add_option("--videos", args.videos_glob, "Glob filter on video ids");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--jobs", args.jobs, "Worker pool size");
}

hazpipe::PipelineConfig make_config(const CommonArgs& args) {
    hazpipe::PipelineConfig config = hazpipe::load_config(args.config_path);
    if (!args.videos_glob.empty()) config.videos_glob = args.videos_glob;
    if (args.jobs > 0) config.jobs = args.jobs;
    if (!args.strategy.empty()) {
        if (args.strategy == "object_size")
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::ObjectSize;
        else if (args.strategy == "optical_flow")
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::OpticalFlow;
        else if (args.strategy == "baseline")
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::Baseline;
        else if (args.strategy == "ensemble_or") {
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::Ensemble;
            config.reaction.ensemble = hazpipe::EnsembleKind::Or;
        } else if (args.strategy == "ensemble_and") {
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::Ensemble;
            config.reaction.ensemble = hazpipe::EnsembleKind::And;
        } else if (args.strategy == "ensemble_mean") {
            config.reaction.kind = hazpipe::ReactionStrategy::Kind::Ensemble;
            config.reaction.ensemble = hazpipe::EnsembleKind::Mean;
        } else {
            throw hazpipe::ValidationError("unknown --strategy \"" + args.strategy + "\"");
        }
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dashcam hazard analysis pipeline"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic dataset");
    uint64_t seed = 42;
    hazpipe::SynthOptions synth_options;
    synth->add_option("--out", args.out_dir, "Dataset directory")->required();
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--num-videos", synth_options.videos, "Number of videos");
    synth->add_option("--frames", synth_options.frames, "Frames per video");
    synth->add_option("--width", synth_options.width, "Frame width");
    synth->add_option("--height", synth_options.height, "Frame height");
    synth->add_option("--format", synth_options.frame_format, "Frame format: png or pgm");

    auto* signals = app.add_subcommand("signals", "Export motion-signal CSVs per video");
    bool plots = false;
    bool flow_stats = false;
    add_common(signals, args);
    signals->add_flag("--plot", plots, "Also write SVG charts with breakpoints");
    signals->add_flag("--flow-stats", flow_stats,
                      "Also dump per-pair flow magnitude/angle means");
    signals->add_option("--strategy", args.strategy, "Reaction strategy override");

    auto* react = app.add_subcommand("react", "Export driver-reaction CSVs per video");
    add_common(react, args);
    react->add_option("--strategy", args.strategy, "Reaction strategy override");

    auto* hazards = app.add_subcommand("hazards", "Export hazard selections per video");
    add_common(hazards, args);

    auto* caption = app.add_subcommand("caption", "Export aggregated captions per hazard track");
    add_common(caption, args);

    auto* run = app.add_subcommand("run", "Full pipeline: submission table plus eval report");
    add_common(run, args);
    run->add_option("--strategy", args.strategy, "Reaction strategy override");

    auto* eval = app.add_subcommand("eval", "Score an existing submission against ground truth");
    std::string submission_path;
    add_common(eval, args);
    eval->add_option("--submission", submission_path, "Submission CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto result = hazpipe::generate_synthetic(args.out_dir, seed, synth_options);
            std::printf("synthetic dataset written to %s\n", args.out_dir.c_str());
            std::printf("config: %s\n", result.config_path.c_str());
            return kExitOk;
        }

        hazpipe::PipelineConfig config = make_config(args);
        hazpipe::Pipeline pipeline(std::move(config));

        if (signals->parsed()) {
            const auto written = pipeline.run_signals(args.out_dir, plots, flow_stats);
            for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
            return kExitOk;
        }
        if (react->parsed()) {
            const auto written = pipeline.run_reaction(args.out_dir);
            for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
            return kExitOk;
        }
        if (hazards->parsed() || caption->parsed()) {
            const bool with_captions = caption->parsed();
            fs::create_directories(args.out_dir);
            for (const auto& video : pipeline.videos()) {
                const hazpipe::HazardSelection selection = with_captions
                                                               ? pipeline.captioned_hazards_for(video)
                                                               : pipeline.hazards_for(video);
                nlohmann::json frames = nlohmann::json::array();
                nlohmann::json tracks = nlohmann::json::object();
                for (const auto& frame : selection.per_frame) {
                    nlohmann::json entries = nlohmann::json::array();
                    for (const auto& entry : frame) {
                        entries.push_back({entry.track_id, entry.label});
                        if (!entry.label.empty()) tracks[entry.track_id] = entry.label;
                    }
                    frames.push_back(std::move(entries));
                }
                const nlohmann::json doc{{"video_id", video.video_id},
                                         {"tracks", std::move(tracks)},
                                         {"frames", std::move(frames)}};
                const char* suffix = with_captions ? "_captions.json" : "_hazards.json";
                const std::string out_path =
                    (fs::path(args.out_dir) / (video.video_id + suffix)).string();
                std::ofstream out(out_path);
                if (!out) throw hazpipe::IoError("cannot write " + out_path);
                out << doc.dump(2) << "\n";
                std::printf("wrote %s\n", out_path.c_str());
            }
            return kExitOk;
        }
        if (run->parsed()) {
            const auto result = pipeline.run(args.out_dir);
            std::printf("wrote %s\n", result.submission_path.c_str());
            if (result.report) {
                std::printf("wrote %s\n", result.eval_json_path.c_str());
                std::printf("wrote %s\n", result.eval_csv_path.c_str());
                std::printf("overall: reaction=%.4f detection=%.4f classific=%.4f macro=%.4f\n",
                            result.report->overall.reaction, result.report->overall.detection,
                            result.report->overall.classification, result.report->overall.macro);
            }
            return kExitOk;
        }
        if (eval->parsed()) {
            const auto table = hazpipe::read_submission(submission_path);
            const auto report = pipeline.evaluate_table(table);
            fs::create_directories(args.out_dir);
            const std::string json_path = (fs::path(args.out_dir) / "eval.json").string();
            const std::string csv_path = (fs::path(args.out_dir) / "eval.csv").string();
            std::FILE* jf = std::fopen(json_path.c_str(), "w");
            if (!jf) throw hazpipe::IoError("cannot write " + json_path);
            std::fputs((hazpipe::eval_report_json(report) + "\n").c_str(), jf);
            std::fclose(jf);
            std::FILE* cf = std::fopen(csv_path.c_str(), "w");
            if (!cf) throw hazpipe::IoError("cannot write " + csv_path);
            std::fputs(hazpipe::eval_report_csv(report).c_str(), cf);
            std::fclose(cf);
            std::printf("wrote %s\n", json_path.c_str());
            std::printf("wrote %s\n", csv_path.c_str());
            std::printf("overall: reaction=%.4f detection=%.4f classific=%.4f macro=%.4f\n",
                        report.overall.reaction, report.overall.detection,
                        report.overall.classification, report.overall.macro);
            return kExitOk;
        }
    } catch (const hazpipe::BackendError& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return kExitBackend;
    } catch (const hazpipe::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const hazpipe::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
