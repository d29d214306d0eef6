#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hazpipe/errors.hpp"
#include "hazpipe/metrics.hpp"
#include "oracles.hpp"

using namespace hazpipe;

namespace {

std::vector<std::set<std::string>> sets(std::vector<std::set<std::string>> v) { return v; }

}  // namespace

TEST_CASE("reaction accuracy") {
    CHECK(reaction_accuracy({false, true, true}, {false, true, true}) == 1.0);
    CHECK(reaction_accuracy({false, false, true, true}, {false, true, true, true}) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(reaction_accuracy({true, true}, {false, false}) == 0.0);
    CHECK_THROWS_AS(reaction_accuracy(std::vector<bool>{true}, std::vector<bool>{true, false}),
                    ValidationError);
}

TEST_CASE("reaction accuracy is reflexive for arbitrary series") {
    oracle::Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<bool> series(static_cast<size_t>(rng.uniform_int(1, 40)));
        for (auto&& b : series) b = rng.next() % 2 == 0;
        CHECK(reaction_accuracy(series, series) == 1.0);
    }
}

TEST_CASE("detection accuracy") {
    SUBCASE("half overlap on a single frame") {
        CHECK(detection_accuracy(sets({{"a"}}), sets({{"a", "b"}})) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("supersets score one") {
        CHECK(detection_accuracy(sets({{"a", "b", "c"}, {"a", "x"}}),
                                 sets({{"a"}, {"x"}})) == doctest::Approx(1.0));
    }
    SUBCASE("disjoint scores zero") {
        CHECK(detection_accuracy(sets({{"q"}}), sets({{"a", "b"}})) == 0.0);
    }
    SUBCASE("empty truth counts only against non-empty predictions") {
        // Frame 0 empty-empty (scores 1), frame 1 empty truth with a spurious
        // pick (skipped), frame 2 regular.
        CHECK(detection_accuracy(sets({{}, {"x"}, {"a"}}), sets({{}, {}, {"a", "b"}})) ==
              doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("all frames skipped gives zero") {
        CHECK(detection_accuracy(sets({{"x"}}), sets({{}})) == 0.0);
    }
    SUBCASE("growing predictions never lower the score") {
        oracle::Rng rng(3);
        for (int trial = 0; trial < 30; ++trial) {
            const int n = rng.uniform_int(1, 10);
            std::vector<std::set<std::string>> truth(static_cast<size_t>(n));
            std::vector<std::set<std::string>> pred(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const int hazards = rng.uniform_int(1, 4);
                for (int h = 0; h < hazards; ++h) truth[i].insert("t" + std::to_string(h));
                for (const auto& t : truth[i])
                    if (rng.next() % 2 == 0) pred[i].insert(t);
            }
            const double before = detection_accuracy(pred, truth);
            auto grown = pred;
            for (int i = 0; i < n; ++i)
                for (const auto& t : truth[i]) grown[i].insert(t);
            CHECK(detection_accuracy(grown, truth) >= before - 1e-12);
        }
    }
}

TEST_CASE("classification accuracy") {
    CHECK(classification_accuracy(sets({{"dog", "cat"}}), sets({{"dog"}})) ==
          doctest::Approx(1.0));
    CHECK(classification_accuracy(sets({{"dog"}}), sets({{"dog", "leash"}})) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(classification_accuracy(sets({{"zebra"}}), sets({{"dog"}})) == 0.0);

    SUBCASE("token order and duplicates are irrelevant") {
        // Multi-word predictions tokenize; repeated tokens collapse.
        CHECK(classification_accuracy(sets({{"dog on leash", "leash dog"}}),
                                      sets({{"dog", "leash"}})) == doctest::Approx(1.0));
    }
    SUBCASE("matching is on normalized tokens") {
        CHECK(classification_accuracy(sets({{"Dog."}}), sets({{"dog"}})) == doctest::Approx(1.0));
    }
}

TEST_CASE("macro accuracy") {
    CHECK(macro_accuracy(0.9, 0.6, 0.3) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(macro_accuracy(1, 1, 1) == 1.0);
    CHECK(macro_accuracy(0, 0, 0) == 0.0);
}

TEST_CASE("evaluate_video against a perfect prediction") {
    GroundTruth truth;
    truth.video_id = "v";
    truth.reaction = {false, false, true, true};
    truth.hazard_tracks = {{}, {"a"}, {"a", "b"}, {"b"}};
    truth.hazard_classes = {{}, {"dog"}, {"dog"}, {"cat"}};

    ReactionSeries reaction{"v", 4, 2};
    HazardSelection hazards{"v", {}};
    hazards.per_frame.resize(4);
    hazards.per_frame[1] = {{"a", "dog"}};
    hazards.per_frame[2] = {{"a", "dog"}, {"b", "dog"}};
    hazards.per_frame[3] = {{"b", "cat"}};

    const Accuracies acc = evaluate_video(reaction, hazards, truth);
    CHECK(acc.reaction == 1.0);
    CHECK(acc.detection == 1.0);
    CHECK(acc.classification == 1.0);
    CHECK(acc.macro == 1.0);
}

TEST_CASE("report combination averages videos with equal weight") {
    std::vector<VideoEval> evals{
        {"b", {1.0, 0.5, 0.0, 0.5}},
        {"a", {0.0, 0.5, 1.0, 0.5}},
    };
    const EvalReport report = combine_reports(std::move(evals));
    REQUIRE(report.videos.size() == 2);
    CHECK(report.videos[0].video_id == "a");  // sorted
    CHECK(report.overall.reaction == doctest::Approx(0.5));
    CHECK(report.overall.detection == doctest::Approx(0.5));
    CHECK(report.overall.classification == doctest::Approx(0.5));
    CHECK(report.overall.macro ==
          doctest::Approx(macro_accuracy(0.5, 0.5, 0.5)).epsilon(1e-12));

    const std::string json_text = eval_report_json(report);
    CHECK(json_text.find("a_macro") != std::string::npos);
    const std::string csv_text = eval_report_csv(report);
    CHECK(csv_text.rfind("video_id,a_reaction,a_detection,a_classific,a_macro\n", 0) == 0);
    CHECK(csv_text.find("overall,") != std::string::npos);
}
