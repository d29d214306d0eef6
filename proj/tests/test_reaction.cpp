#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "hazpipe/errors.hpp"
#include "hazpipe/reaction.hpp"
#include "oracles.hpp"

using namespace hazpipe;
namespace fs = std::filesystem;

namespace {

ReactionSeries step_at(std::optional<int> step, int n) { return step_from_breakpoint(step, n, "v"); }

MotionSeries median_series(std::vector<double> values) {
    return {"v", SignalKind::MedianDistance, std::move(values)};
}

// Reference prefix-OLS slope, computed directly.
double prefix_slope(const std::vector<double>& values, int upto) {
    const int m = upto + 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int t = 0; t < m; ++t) {
        sx += t;
        sy += values[t];
        sxx += static_cast<double>(t) * t;
        sxy += t * values[t];
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST_CASE("step from breakpoint") {
    CHECK(step_at(2, 5).values() == std::vector<bool>{false, false, true, true, true});
    CHECK(step_at(std::nullopt, 3).values() == std::vector<bool>{false, false, false});
    CHECK(step_at(0, 2).values() == std::vector<bool>{true, true});
    CHECK_THROWS_AS(step_at(5, 5), ValidationError);
}

TEST_CASE("reaction series from values enforces the step shape") {
    const auto ok = ReactionSeries::from_values("v", {false, true, true});
    CHECK(ok.step == 1);
    CHECK_THROWS_AS(ReactionSeries::from_values("v", {false, true, false}), ValidationError);
    CHECK(ReactionSeries::from_values("v", {}).length == 0);
}

TEST_CASE("baseline slope rule") {
    SUBCASE("strictly decreasing flags at the window edge") {
        const auto series = baseline_slope_rule(median_series({10, 8, 6, 4}), 3, 0.0);
        CHECK(series.step == 2);  // prefix slope -2 at i=2
    }
    SUBCASE("constant never flags") {
        CHECK(!baseline_slope_rule(median_series({5, 5, 5, 5, 5}), 3, 0.0).step.has_value());
    }
    SUBCASE("increasing never flags") {
        CHECK(!baseline_slope_rule(median_series({1, 2, 3, 4, 5}), 3, 0.0).step.has_value());
    }
    SUBCASE("short series never flags") {
        CHECK(!baseline_slope_rule(median_series({3, 1}), 10, 0.0).step.has_value());
    }
    SUBCASE("matches the reference first-negative-prefix-slope frame") {
        oracle::Rng rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> values(30);
            double level = rng.uniform(50, 100);
            for (int i = 0; i < 30; ++i) {
                // Rises first, decays later; where it flips is up to the rng.
                const int knee = 8 + trial % 15;
                level += i < knee ? rng.uniform(0.0, 2.0) : rng.uniform(-4.0, 0.5);
                values[i] = level;
            }
            const int min_window = 5;
            const auto series = baseline_slope_rule(median_series(values), min_window, 0.0);
            std::optional<int> expected;
            for (int i = min_window - 1; i < 30; ++i) {
                if (prefix_slope(values, i) < 0.0) {
                    expected = i;
                    break;
                }
            }
            CHECK(series.step == expected);
        }
    }
    SUBCASE("slope is invariant to a constant value offset") {
        const std::vector<double> values{9, 9.5, 8, 7, 7.2, 5};
        const auto base = baseline_slope_rule(median_series(values), 3, 0.0);
        std::vector<double> lifted = values;
        for (auto& v : lifted) v += 1000.0;
        const auto shifted = baseline_slope_rule(median_series(lifted), 3, 0.0);
        CHECK(base.step == shifted.step);
    }
}

TEST_CASE("ensembles on hand cases") {
    const int n = 50;
    const auto a = step_at(10, n);
    const auto b = step_at(20, n);
    CHECK(ensemble_or({a, b}).step == 10);
    CHECK(ensemble_and({a, b}).step == 20);
    CHECK(ensemble_mean_position({a, b}).step == 15);

    const auto silent = step_at(std::nullopt, n);
    CHECK(ensemble_or({a, silent}).step == 10);
    CHECK(ensemble_or({silent, silent}).step == std::nullopt);
    CHECK(ensemble_and({a, silent}).step == std::nullopt);
    CHECK(ensemble_and({a, a}).step == 10);

    // 3 and 4 average to 3.5; half-down rounds to 3.
    CHECK(ensemble_mean_position({step_at(3, n), step_at(4, n)}).step == 3);
    CHECK(ensemble_mean_position({a}).step == 10);

    CHECK_THROWS_AS(ensemble_or({a, step_at(1, 7)}), ValidationError);
    CHECK_THROWS_AS(ensemble_or({}), ValidationError);
}

TEST_CASE("ensemble identities over all step pairs") {
    const int n = 20;
    for (int p = 0; p <= n; ++p) {  // n means "never transitions"
        for (int q = 0; q <= n; ++q) {
            const auto a = step_at(p < n ? std::optional<int>(p) : std::nullopt, n);
            const auto b = step_at(q < n ? std::optional<int>(q) : std::nullopt, n);

            const auto orr = ensemble_or({a, b});
            const auto andd = ensemble_and({a, b});
            const auto mean = ensemble_mean_position({a, b});

            CHECK(orr.step_or_end() == std::min(p, q));
            CHECK(andd.step_or_end() == std::max(p, q));
            const double m = (p + q) / 2.0;
            const int expected = static_cast<int>(std::ceil(m - 0.5));
            CHECK(mean.step_or_end() == (expected >= n ? n : expected));

            // Outputs stay monotone steps; mean stays within the input span.
            CHECK(mean.step_or_end() >= std::min(p, q));
            CHECK(mean.step_or_end() <= std::max(p, q));

            // Pointwise semantics agree with the step arithmetic.
            for (int i = 0; i < n; ++i) {
                CHECK(orr.at(i) == (a.at(i) || b.at(i)));
                CHECK(andd.at(i) == (a.at(i) && b.at(i)));
            }
        }
    }
}

TEST_CASE("reaction CSV round trip") {
    const fs::path dir = fs::temp_directory_path() / "hazpipe_reaction_csv";
    fs::create_directories(dir);
    const std::string path = (dir / "r.csv").string();

    write_reaction_csv(step_at(3, 6), path);
    const auto back = read_reaction_csv(path, "v");
    CHECK(back.step == 3);
    CHECK(back.length == 6);

    std::ofstream(path) << "frame_index,driver_state_changed\n0,True\n1,False\n";
    CHECK_THROWS_AS(read_reaction_csv(path, "v"), ValidationError);  // not a step
    fs::remove_all(dir);
}
