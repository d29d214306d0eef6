#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "hazpipe/annotations_io.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/hazards.hpp"
#include "oracles.hpp"

using namespace hazpipe;

namespace {

VideoAnnotations demo_video() {
    VideoAnnotations video;
    video.video_id = "v";
    video.width = 1000;
    video.height = 600;
    video.frames.resize(2);
    // Frame 0: "near" sits by the center, "far" in a corner, "mid" between.
    video.frames[0].frame_index = 0;
    video.frames[0].detections = {
        {0, "near", {495, 295, 505, 305}},
        {0, "far", {0, 0, 10, 10}},
        {0, "mid", {700, 300, 720, 320}},
    };
    video.frames[1].frame_index = 1;
    video.frames[1].detections = {
        {1, "near", {495, 295, 505, 305}},
        {1, "far", {2, 0, 12, 10}},
    };
    return video;
}

std::vector<std::string> frame_tracks(const HazardSelection& sel, int frame) {
    std::vector<std::string> out;
    for (const auto& entry : sel.per_frame[frame]) out.push_back(entry.track_id);
    return out;
}

}  // namespace

TEST_CASE("nearest-k track selection") {
    const auto video = demo_video();
    SUBCASE("k = 1 keeps the closest") {
        const auto sel = nearest_k_tracks(video, 1);
        CHECK(frame_tracks(sel, 0) == std::vector<std::string>{"near"});
        CHECK(frame_tracks(sel, 1) == std::vector<std::string>{"near"});
    }
    SUBCASE("k larger than the frame keeps everything, by distance") {
        const auto sel = nearest_k_tracks(video, 10);
        CHECK(frame_tracks(sel, 0) == std::vector<std::string>{"near", "mid", "far"});
    }
    SUBCASE("empty frames select nothing") {
        VideoAnnotations empty;
        empty.video_id = "e";
        empty.width = 100;
        empty.height = 100;
        empty.frames.resize(1);
        empty.frames[0].frame_index = 0;
        CHECK(nearest_k_tracks(empty, 3).per_frame[0].empty());
    }
    SUBCASE("distance ties break by track id") {
        VideoAnnotations tie;
        tie.video_id = "t";
        tie.width = 100;
        tie.height = 100;
        tie.frames.resize(1);
        tie.frames[0].frame_index = 0;
        tie.frames[0].detections = {
            {0, "zz", {60, 50, 70, 60}},  // center (65,55)
            {0, "aa", {30, 40, 40, 50}},  // center (35,45), same distance to (50,50)
        };
        CHECK(frame_tracks(nearest_k_tracks(tie, 1), 0) == std::vector<std::string>{"aa"});
    }
}

TEST_CASE("all tracks equals nearest-k with a huge k") {
    const auto video = demo_video();
    const auto all = all_tracks(video);
    CHECK(frame_tracks(all, 0) == std::vector<std::string>{"far", "mid", "near"});
    const auto big = nearest_k_tracks(video, 100);
    for (int f = 0; f < 2; ++f) {
        auto a = frame_tracks(all, f);
        auto b = frame_tracks(big, f);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }
}

TEST_CASE("area-weighted class scores") {
    VideoAnnotations video;
    video.video_id = "v";
    video.width = 100;
    video.height = 100;
    video.frames.resize(2);
    video.frames[0].frame_index = 0;
    video.frames[0].detections = {{0, "t", {0, 0, 10, 1}}};   // area 10
    video.frames[1].frame_index = 1;
    video.frames[1].detections = {{1, "t", {0, 0, 10, 4}}};   // area 40
    const auto tracklets = build_tracklets(video);

    SUBCASE("two-frame hand example") {
        const std::vector<ClassPrediction> preds{
            {"v", "t", 0, {{"dog", 0.5}}},
            {"v", "t", 1, {{"dog", 0.25}}},
        };
        const auto scores = area_weighted_scores(preds, tracklets);
        REQUIRE(scores.size() == 1);
        CHECK(scores[0].scores.at("dog") == doctest::Approx(15.0).epsilon(1e-12));
        CHECK(scores[0].argmax == "dog");
    }
    SUBCASE("single frame, P=0.8 and area 100") {
        VideoAnnotations one;
        one.video_id = "v";
        one.width = 100;
        one.height = 100;
        one.frames.resize(1);
        one.frames[0].frame_index = 0;
        one.frames[0].detections = {{0, "t", {0, 0, 10, 10}}};
        const auto scores =
            area_weighted_scores({{"v", "t", 0, {{"cat", 0.8}}}}, build_tracklets(one));
        CHECK(scores[0].scores.at("cat") == doctest::Approx(80.0).epsilon(1e-12));
    }
    SUBCASE("class absent from every top-k scores zero") {
        const auto scores = area_weighted_scores({{"v", "t", 0, {{"dog", 0.5}}}}, tracklets);
        CHECK(scores[0].scores.count("zebra") == 0);
    }
    SUBCASE("prediction without a detection is rejected") {
        CHECK_THROWS_AS(area_weighted_scores({{"v", "t", 7, {{"dog", 0.5}}}}, tracklets),
                        ValidationError);
    }
    SUBCASE("argmax survives uniform area scaling") {
        oracle::Rng rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            VideoAnnotations base;
            base.video_id = "v";
            base.width = 1000;
            base.height = 1000;
            const int frames = rng.uniform_int(1, 5);
            base.frames.resize(static_cast<size_t>(frames));
            std::vector<ClassPrediction> preds;
            for (int i = 0; i < frames; ++i) {
                base.frames[i].frame_index = i;
                const double w = rng.uniform(1, 50), h = rng.uniform(1, 50);
                base.frames[i].detections = {{i, "t", {0, 0, w, h}}};
                ClassPrediction pred{"v", "t", i, {}};
                const int k = rng.uniform_int(1, 5);
                for (int c = 0; c < k; ++c)
                    pred.topk.emplace_back("c" + std::to_string(c), rng.uniform(0, 1));
                preds.push_back(std::move(pred));
            }
            const auto argmax1 = area_weighted_scores(preds, build_tracklets(base))[0].argmax;

            const double s = rng.uniform(0.1, 9.0);
            auto scaled = base;
            for (auto& frame : scaled.frames)
                for (auto& det : frame.detections)
                    det.bbox = {det.bbox.x1 * s, det.bbox.y1 * s, det.bbox.x2 * s, det.bbox.y2 * s};
            const auto argmax2 = area_weighted_scores(preds, build_tracklets(scaled))[0].argmax;
            CHECK(argmax1 == argmax2);
        }
    }
}

TEST_CASE("whitelist filter") {
    const auto video = demo_video();
    const auto selection = all_tracks(video);
    const auto whitelist = Whitelist::standard_traffic();

    std::vector<TrackClassScore> scores(3);
    scores[0].track_id = "near";
    scores[0].argmax = "bus";
    scores[1].track_id = "far";
    scores[1].argmax = "man";
    scores[2].track_id = "mid";
    scores[2].argmax = "Pickup  Truck";  // normalization folds case and spaces

    const auto filtered = whitelist_filter(selection, scores, whitelist);
    CHECK(frame_tracks(filtered, 0) == std::vector<std::string>{"far"});
    CHECK(filtered.per_frame[0][0].label == "man");

    SUBCASE("unscored tracks are kept") {
        const auto kept = whitelist_filter(selection, {}, whitelist);
        CHECK(frame_tracks(kept, 0) == frame_tracks(selection, 0));
    }
    SUBCASE("empty whitelist keeps everything") {
        const auto kept = whitelist_filter(selection, scores, Whitelist{});
        CHECK(frame_tracks(kept, 0) == frame_tracks(selection, 0));
        CHECK(kept.per_frame[0].back().label == "bus");  // label still attached
    }
}

TEST_CASE("trajectory size filter") {
    VideoAnnotations video;
    video.video_id = "v";
    video.width = 1000;
    video.height = 1000;
    video.frames.resize(2);
    video.frames[0].frame_index = 0;
    video.frames[1].frame_index = 1;
    // mover: displacement 200, mean box 50x30 -> kept
    video.frames[0].detections.push_back({0, "mover", {0, 0, 50, 30}});
    video.frames[1].detections.push_back({1, "mover", {200, 0, 250, 30}});
    // creeper: displacement 35, between min(50,30) and max(50,30) -> removed
    // under the max comparator, kept under min
    video.frames[0].detections.push_back({0, "creeper", {500, 500, 550, 530}});
    video.frames[1].detections.push_back({1, "creeper", {535, 500, 585, 530}});
    // statue: displacement 0 -> removed
    video.frames[0].detections.push_back({0, "statue", {800, 800, 820, 820}});
    video.frames[1].detections.push_back({1, "statue", {800, 800, 820, 820}});

    const auto tracklets = build_tracklets(video);
    const auto filtered = trajectory_size_filter(all_tracks(video), tracklets);
    CHECK(frame_tracks(filtered, 0) == std::vector<std::string>{"mover"});
    CHECK(frame_tracks(filtered, 1) == std::vector<std::string>{"mover"});

    SUBCASE("min comparator is more permissive") {
        const auto loose = trajectory_size_filter(all_tracks(video), tracklets,
                                                  TrajectoryComparator::Min);
        CHECK(frame_tracks(loose, 0) == std::vector<std::string>{"creeper", "mover"});
    }
}

TEST_CASE("filters compose, commute, and only remove") {
    const auto video = demo_video();
    const auto tracklets = build_tracklets(video);
    const auto selection = all_tracks(video);
    std::vector<TrackClassScore> scores(1);
    scores[0].track_id = "near";
    scores[0].argmax = "bus";
    const auto whitelist = Whitelist::standard_traffic();

    const auto ab =
        trajectory_size_filter(whitelist_filter(selection, scores, whitelist), tracklets);
    const auto ba =
        whitelist_filter(trajectory_size_filter(selection, tracklets), scores, whitelist);
    REQUIRE(ab.frame_count() == ba.frame_count());
    for (int f = 0; f < ab.frame_count(); ++f) {
        CHECK(frame_tracks(ab, f) == frame_tracks(ba, f));
        // Subset of the unfiltered selection, per frame.
        auto outer = frame_tracks(selection, f);
        for (const auto& id : frame_tracks(ab, f))
            CHECK(std::find(outer.begin(), outer.end(), id) != outer.end());
    }
}

TEST_CASE("select_hazards composes base and filters") {
    const auto video = demo_video();
    HazardConfig config;

    SUBCASE("all tracks, no filters") {
        const auto sel = select_hazards(video, config, {});
        CHECK(frame_tracks(sel, 0).size() == 3);
    }
    SUBCASE("nearest-1 baseline behavior") {
        config.base = HazardConfig::Base::NearestK;
        config.k = 1;
        const auto sel = select_hazards(video, config, {});
        CHECK(frame_tracks(sel, 0) == std::vector<std::string>{"near"});
    }
    SUBCASE("whitelist drops everything when every argmax is whitelisted") {
        config.whitelist_enabled = true;
        std::vector<ClassPrediction> preds;
        for (const auto& frame : video.frames)
            for (const auto& det : frame.detections)
                preds.push_back({"v", det.track_id, det.frame_index, {{"bus", 0.9}}});
        const auto sel = select_hazards(video, config, preds);
        CHECK(sel.per_frame[0].empty());
        CHECK(sel.per_frame[1].empty());
    }
}

TEST_CASE("predictions JSONL round trip and validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hazpipe_preds";
    fs::create_directories(dir);
    const std::string path = (dir / "p.jsonl").string();

    const std::vector<ClassPrediction> preds{
        {"v", "a", 0, {{"dog", 0.5}, {"cat", 0.25}}},
        {"v", "b", 3, {{"bus", 1.0}}},
    };
    write_predictions_jsonl(preds, path);
    const auto back = parse_predictions_jsonl(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].track_id == "a");
    CHECK(back[0].topk.size() == 2);
    CHECK(back[1].frame_index == 3);

    std::ofstream(path) << R"({"video_id":"v","track_id":"a","frame_index":0,"topk":[["dog",-0.5]]})"
                        << "\n";
    CHECK_THROWS_AS(parse_predictions_jsonl(path), ValidationError);

    std::ofstream(path) << R"({"video_id":"v","track_id":"a","frame_index":0,)"
                        << R"("topk":[["dog",0.5],["dog",0.2]]})" << "\n";
    CHECK_THROWS_AS(parse_predictions_jsonl(path), ValidationError);
    fs::remove_all(dir);
}
