#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hazpipe/classifier_client.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/image_io.hpp"
#include "hazpipe/pipeline.hpp"
#include "hazpipe/plot.hpp"
#include "hazpipe/synthetic.hpp"
#include "oracles.hpp"

using namespace hazpipe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hazpipe_pipeline_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Stops and joins the test server even when an assertion unwinds the stack.
struct ServerGuard {
    httplib::Server& server;
    std::thread& thread;
    ~ServerGuard() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

std::string file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Small dataset so the flow stage stays fast in unit tests.
SynthOptions small_synth() {
    SynthOptions options;
    options.videos = 1;
    options.frames = 24;
    options.width = 96;
    options.height = 72;
    return options;
}

}  // namespace

TEST_CASE("config parsing, defaults, and path resolution") {
    const fs::path dir = temp_dir("config");
    const std::string config_path = (dir / "config.json").string();
    std::ofstream(config_path) << R"({
      "paths": {"annotations": "ann.json", "frames_root": "/abs/frames"},
      "cpd": {"mode": "penalized", "beta": 0.25, "gamma": 2.0},
      "reaction": {"strategy": "ensemble", "ensemble": "or", "inputs": ["object_size"]},
      "hazards": {"base": "nearest_k", "k": 3, "filters": ["size"]},
      "captions": {"mode": "replay", "cache": "captions.jsonl"},
      "submission": {"slots": 7},
      "jobs": 4
    })";

    const PipelineConfig config = load_config(config_path);
    CHECK(config.paths.annotations == (dir / "ann.json").string());
    CHECK(config.paths.frames_root == "/abs/frames");  // absolute stays put
    CHECK(config.cpd.mode == CpdConfig::Mode::Penalized);
    CHECK(config.cpd.beta == 0.25);
    CHECK(config.cpd.kernel.gamma == 2.0);
    CHECK(config.reaction.ensemble == EnsembleKind::Or);
    CHECK(config.reaction.inputs == std::vector<ReactionInput>{ReactionInput::ObjectSize});
    CHECK(config.hazards.base == HazardConfig::Base::NearestK);
    CHECK(config.hazards.k == 3);
    CHECK(!config.hazards.whitelist_enabled);
    CHECK(config.hazards.size_filter_enabled);
    CHECK(config.captions.mode == CaptionSettings::Mode::Replay);
    CHECK(config.captions.cache_path == (dir / "captions.jsonl").string());
    CHECK(config.submission_slots == 7);
    CHECK(config.jobs == 4);
    CHECK(!config.reaction.needs_frames());

    std::ofstream(config_path) << R"({"cpd": {"mode": "sideways"}})";
    CHECK_THROWS_AS(load_config(config_path), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("synthetic generation is deterministic and self-consistent") {
    const fs::path dir_a = temp_dir("synth_a");
    const fs::path dir_b = temp_dir("synth_b");
    const auto opts = small_synth();
    const auto a = generate_synthetic(dir_a.string(), 42, opts);
    const auto b = generate_synthetic(dir_b.string(), 42, opts);

    CHECK(file_text(a.annotations_path) == file_text(b.annotations_path));
    CHECK(file_text(a.truth_path) == file_text(b.truth_path));
    CHECK(file_text(a.predictions_path) == file_text(b.predictions_path));
    CHECK(file_text(a.caption_cache_path) == file_text(b.caption_cache_path));
    CHECK(file_text(a.config_path) == file_text(b.config_path));
    CHECK(file_text((fs::path(a.frames_root) / "synth_v0" / "frame_000000.png").string()) ==
          file_text((fs::path(b.frames_root) / "synth_v0" / "frame_000000.png").string()));

    const fs::path dir_c = temp_dir("synth_c");
    const auto c = generate_synthetic(dir_c.string(), 43, opts);
    CHECK(file_text(a.annotations_path) != file_text(c.annotations_path));

    // Planted reaction flips exactly at the configured frame.
    const auto videos = parse_annotations(b.annotations_path);
    const auto truths = parse_ground_truth(b.truth_path, videos);
    REQUIRE(truths.size() == 1);
    const int flip = 24 / 2;  // frames/2 + 5*(v%3) with v=0
    for (int i = 0; i < truths[0].frame_count(); ++i)
        CHECK(truths[0].reaction[i] == (i >= flip));

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
}

TEST_CASE("pipeline end to end on a synthetic dataset") {
    const fs::path dir = temp_dir("run");
    const auto synth = generate_synthetic(dir.string(), 42, small_synth());
    const std::string annotations_before = file_text(synth.annotations_path);
    const std::string truth_before = file_text(synth.truth_path);

    PipelineConfig config = load_config(synth.config_path);
    config.jobs = 2;
    Pipeline pipeline(config);
    REQUIRE(pipeline.videos().size() == 1);

    const fs::path out = dir / "out";
    const RunResult result = pipeline.run(out.string());

    REQUIRE(result.report.has_value());
    // The planted dataset is built so the configured strategies recover the
    // truth exactly.
    CHECK(result.report->overall.reaction == doctest::Approx(1.0));
    CHECK(result.report->overall.detection == doctest::Approx(1.0));
    CHECK(result.report->overall.classification == doctest::Approx(1.0));
    CHECK(result.report->overall.macro == doctest::Approx(1.0));

    // The submission on disk round-trips and re-scores to the same report.
    const SubmissionTable table = read_submission(result.submission_path);
    const auto videos = parse_annotations(synth.annotations_path);
    const auto truths = parse_ground_truth(synth.truth_path, videos);
    const EvalReport rescored = evaluate_submission(table, truths);
    CHECK(rescored.overall.macro == doctest::Approx(result.report->overall.macro).epsilon(1e-12));

    // Captions from the replay cache land in the hazard-name columns.
    const auto& row = table.rows.at({"synth_v0", 20});
    REQUIRE(!row.hazards.empty());
    CHECK(row.hazards[0].first == "hz0");
    CHECK(row.hazards[0].second.find("dog") != std::string::npos);

    // Inputs are read-only for the whole run.
    CHECK(file_text(synth.annotations_path) == annotations_before);
    CHECK(file_text(synth.truth_path) == truth_before);

    SUBCASE("without ground truth the table is written and the report absent") {
        PipelineConfig no_truth = load_config(synth.config_path);
        no_truth.paths.ground_truth.clear();
        Pipeline p2(no_truth);
        const RunResult r2 = p2.run((dir / "out_no_truth").string());
        CHECK(!r2.report.has_value());
        CHECK(r2.eval_json_path.empty());
        CHECK(fs::exists(r2.submission_path));
        CHECK(!fs::exists(dir / "out_no_truth" / "eval.json"));
    }

    fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
    const std::string cli = HAZPIPE_CLI_PATH;
    const fs::path dir = temp_dir("cli");

    // 2: validation / missing input.
    const std::string bad_config =
        "\"" + cli + "\" run --config " + (dir / "missing.json").string() + " --out " +
        (dir / "out").string() + " 2>/dev/null";
    int status = std::system(bad_config.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);

    // 3: backend unreachable. Whitelist filtering with a classifier URL and
    // no predictions file forces a live classify call that cannot succeed.
    auto opts = small_synth();
    opts.frames = 20;
    const auto synth = generate_synthetic((dir / "data").string(), 23, opts);
    nlohmann::json config;
    {
        std::ifstream in(synth.config_path);
        in >> config;
    }
    config["paths"].erase("predictions");
    config["classifier_url"] = "http://127.0.0.1:1";
    config["reaction"] = {{"strategy", "object_size"}};
    const std::string config_path = (dir / "data" / "live.json").string();
    std::ofstream(config_path) << config.dump();

    const std::string live =
        "\"" + cli + "\" hazards --config " + config_path + " --out " + (dir / "out").string() +
        " 2>/dev/null";
    status = std::system(live.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 3);

    // 0: a well-formed invocation.
    const std::string ok =
        "\"" + cli + "\" react --config " + synth.config_path + " --strategy object_size --out " +
        (dir / "react").string() + " >/dev/null";
    status = std::system(ok.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);

    fs::remove_all(dir);
}

TEST_CASE("run_signals writes one CSV per video and kind, deterministically") {
    const fs::path dir = temp_dir("signals");
    auto opts = small_synth();
    opts.videos = 2;
    const auto synth = generate_synthetic(dir.string(), 7, opts);

    PipelineConfig config = load_config(synth.config_path);
    config.reaction.kind = ReactionStrategy::Kind::ObjectSize;  // no flow: fast
    Pipeline pipeline(config);

    const fs::path out = dir / "sig";
    const auto written = pipeline.run_signals(out.string());
    REQUIRE(written.size() == 2);  // 2 videos x 1 kind
    for (const auto& path : written) CHECK(path.find("object_size.csv") != std::string::npos);
    const std::string first = file_text(written[0]);
    const auto rewritten = pipeline.run_signals(out.string());
    CHECK(file_text(rewritten[0]) == first);  // byte-identical rerun

    SUBCASE("plots carry breakpoint markers") {
        const auto with_plots = pipeline.run_signals((dir / "plots").string(), true);
        bool saw_svg = false;
        for (const auto& path : with_plots) {
            if (path.size() > 4 && path.substr(path.size() - 4) == ".svg") {
                saw_svg = true;
                const std::string svg = file_text(path);
                CHECK(svg.find("<polyline") != std::string::npos);
                CHECK(svg.find("stroke=\"red\"") != std::string::npos);
            }
        }
        CHECK(saw_svg);
    }

    SUBCASE("flow without a frames root names the video") {
        PipelineConfig broken = load_config(synth.config_path);
        broken.paths.frames_root.clear();
        Pipeline p2(broken);
        CHECK_THROWS_WITH_AS(p2.run_signals((dir / "broken").string()),
                             doctest::Contains("synth_v0"), ValidationError);
    }

    SUBCASE("videos glob filters") {
        PipelineConfig filtered = load_config(synth.config_path);
        filtered.videos_glob = "*_v1";
        Pipeline p3(filtered);
        REQUIRE(p3.videos().size() == 1);
        CHECK(p3.videos()[0].video_id == "synth_v1");
    }

    fs::remove_all(dir);
}

TEST_CASE("reaction CSV export via run_reaction") {
    const fs::path dir = temp_dir("react");
    const auto synth = generate_synthetic(dir.string(), 11, small_synth());
    PipelineConfig config = load_config(synth.config_path);
    config.reaction.kind = ReactionStrategy::Kind::ObjectSize;
    Pipeline pipeline(config);
    const auto written = pipeline.run_reaction((dir / "out").string());
    REQUIRE(written.size() == 1);
    const auto series = read_reaction_csv(written[0], "synth_v0");
    CHECK(series.step == 12);  // planted flip for 24 frames
    fs::remove_all(dir);
}

TEST_CASE("whitelist without a prediction source is a config error") {
    const fs::path dir = temp_dir("nopreds");
    const auto synth = generate_synthetic(dir.string(), 13, small_synth());
    PipelineConfig config = load_config(synth.config_path);
    config.paths.predictions.clear();
    config.classifier_url.clear();
    Pipeline pipeline(config);
    CHECK_THROWS_WITH_AS(pipeline.hazards_for(pipeline.videos()[0]),
                         doctest::Contains("whitelist"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("classifier client against a local service") {
    httplib::Server server;
    // Handlers run on httplib worker threads; record and assert on the main
    // thread afterwards.
    std::atomic<int> bad_payloads{0};
    server.Post("/classify", [&](const httplib::Request& req, httplib::Response& res) {
        const bool png_magic = req.body.size() > 8 &&
                               static_cast<unsigned char>(req.body[0]) == 0x89 &&
                               req.body.substr(1, 3) == "PNG";
        if (!png_magic) ++bad_payloads;
        const auto topk = nlohmann::json::array(
            {nlohmann::json::array({"bus", 0.9}), nlohmann::json::array({"dog", 0.05})});
        res.set_content(nlohmann::json{{"topk", topk}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&]() { server.listen_after_bind(); });
    ServerGuard guard{server, server_thread};
    server.wait_until_ready();

    const fs::path dir = temp_dir("classify");
    auto opts = small_synth();
    opts.frames = 20;
    const auto synth = generate_synthetic(dir.string(), 17, opts);
    const auto videos = parse_annotations(synth.annotations_path);
    const FrameStore store("synth_v0", (fs::path(synth.frames_root) / "synth_v0").string());

    ClassifierClient client("http://127.0.0.1:" + std::to_string(port));
    const auto preds = client.classify_video(videos[0], store);
    CHECK(bad_payloads == 0);
    REQUIRE(preds.size() == static_cast<size_t>(videos[0].frame_count() * 3));
    REQUIRE(!preds[0].topk.empty());
    CHECK(preds[0].topk[0].first == "bus");

    ClassifierClient dead("http://127.0.0.1:1", 2, 1);
    CHECK_THROWS_AS(dead.classify_png({0x89, 0x50}), BackendError);
    fs::remove_all(dir);
}

TEST_CASE("live caption flow through the pipeline") {
    httplib::Server server;
    server.Post("/caption", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const std::string prompt = body.at("prompt").get<std::string>();
        const bool categories = prompt.find("class labels") != std::string::npos;
        res.set_content(
            nlohmann::json{{"text", categories ? "moose moose antler" : "Moose in the road"}}
                .dump(),
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&]() { server.listen_after_bind(); });
    ServerGuard guard{server, server_thread};
    server.wait_until_ready();

    const fs::path dir = temp_dir("livecap");
    const auto synth = generate_synthetic(dir.string(), 19, small_synth());
    PipelineConfig config = load_config(synth.config_path);
    config.captions.mode = CaptionSettings::Mode::Live;
    config.captions.url = "http://127.0.0.1:" + std::to_string(port);
    config.captions.backoff_ms = 1;
    Pipeline pipeline(config);
    const auto selection = pipeline.captioned_hazards_for(pipeline.videos()[0]);
    bool saw_caption = false;
    for (const auto& frame : selection.per_frame) {
        for (const auto& entry : frame) {
            if (!entry.label.empty()) {
                CHECK(entry.label.rfind("moose", 0) == 0);
                saw_caption = true;
            }
        }
    }
    CHECK(saw_caption);
    fs::remove_all(dir);
}
