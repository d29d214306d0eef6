#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "hazpipe/errors.hpp"
#include "hazpipe/submission.hpp"
#include "oracles.hpp"

using namespace hazpipe;
namespace fs = std::filesystem;

namespace {

// Random tables with hostile strings: commas, quotes, unicode, underscores.
SubmissionTable random_table(oracle::Rng& rng) {
    static const std::vector<std::string> track_pool{
        "t1", "track_9", "a,b", "with \"quotes\"", "семь", "x_", "0"};
    static const std::vector<std::string> caption_pool{
        "", "dog on road", "cow, big", "said \"moo\"", "multi  space", "závora"};

    SubmissionTable table;
    table.slots = rng.uniform_int(1, 6);
    const int videos = rng.uniform_int(1, 3);
    for (int v = 0; v < videos; ++v) {
        std::string video_id = "video_" + std::to_string(rng.uniform_int(0, 99));
        if (rng.next() % 4 == 0) video_id += "_x";
        const int frames = rng.uniform_int(1, 6);
        for (int f = 0; f < frames; ++f) {
            SubmissionRow row;
            row.driver_state_changed = rng.next() % 2 == 0;
            const int hazards = rng.uniform_int(0, table.slots);
            for (int h = 0; h < hazards; ++h) {
                row.hazards.emplace_back(
                    track_pool[rng.next() % track_pool.size()] + std::to_string(h),
                    caption_pool[rng.next() % caption_pool.size()]);
            }
            table.rows[{video_id, f}] = std::move(row);
        }
    }
    return table;
}

bool tables_equal(const SubmissionTable& a, const SubmissionTable& b) {
    if (a.slots != b.slots || a.rows.size() != b.rows.size()) return false;
    auto ia = a.rows.begin();
    auto ib = b.rows.begin();
    for (; ia != a.rows.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return false;
        if (ia->second.driver_state_changed != ib->second.driver_state_changed) return false;
        if (ia->second.hazards != ib->second.hazards) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("submission header and slot padding") {
    SubmissionTable table;
    table.slots = 22;
    SubmissionRow row;
    row.driver_state_changed = true;
    row.hazards = {{"t1", "dog"}, {"t2", "cat"}};
    table.rows[{"v", 0}] = row;

    const std::string csv = submission_to_csv(table);
    const auto header_end = csv.find('\n');
    const std::string header = csv.substr(0, header_end);
    CHECK(header.rfind("ID,Driver_State_Changed,Hazard_Track_1,", 0) == 0);
    CHECK(header.find("Hazard_Track_22") != std::string::npos);
    CHECK(header.find("Hazard_Name_22") != std::string::npos);

    // 2 fixed + 44 slot columns => 45 commas per row, with 20 empty track
    // slots between t2 and the first name.
    const std::string body = csv.substr(header_end + 1);
    CHECK(std::count(body.begin(), body.end(), ',') == 45);
    CHECK(body.find("t2,,,") != std::string::npos);

    const auto back = submission_from_csv(csv);
    CHECK(tables_equal(back, table));
}

TEST_CASE("round trip over random hostile tables") {
    oracle::Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const SubmissionTable table = random_table(rng);
        CHECK(tables_equal(submission_from_csv(submission_to_csv(table)), table));
    }
}

TEST_CASE("file round trip") {
    const fs::path dir = fs::temp_directory_path() / "hazpipe_submission";
    fs::create_directories(dir);
    const std::string path = (dir / "s.csv").string();
    oracle::Rng rng(5);
    const SubmissionTable table = random_table(rng);
    write_submission(table, path);
    CHECK(tables_equal(read_submission(path), table));
    fs::remove_all(dir);
}

TEST_CASE("malformed submissions are rejected with diagnostics") {
    const std::string header =
        "ID,Driver_State_Changed,Hazard_Track_1,Hazard_Track_2,Hazard_Name_1,Hazard_Name_2\n";

    SUBCASE("duplicate ID") {
        CHECK_THROWS_WITH_AS(
            submission_from_csv(header + "v_0,True,,,,\nv_0,False,,,,\n"),
            doctest::Contains("duplicate"), ValidationError);
    }
    SUBCASE("bad boolean") {
        CHECK_THROWS_WITH_AS(submission_from_csv(header + "v_0,maybe,,,,\n"),
                             doctest::Contains("boolean"), ValidationError);
    }
    SUBCASE("ID without a frame index") {
        CHECK_THROWS_AS(submission_from_csv(header + "justvideo,True,,,,\n"), ValidationError);
        CHECK_THROWS_AS(submission_from_csv(header + "v_abc,True,,,,\n"), ValidationError);
    }
    SUBCASE("wrong field count") {
        CHECK_THROWS_WITH_AS(submission_from_csv(header + "v_0,True,,\n"),
                             doctest::Contains("fields"), ValidationError);
    }
    SUBCASE("name without a track") {
        CHECK_THROWS_WITH_AS(submission_from_csv(header + "v_0,True,,,dog,\n"),
                             doctest::Contains("without a track"), ValidationError);
    }
    SUBCASE("track after an empty slot") {
        CHECK_THROWS_WITH_AS(submission_from_csv(header + "v_0,True,,t2,,cat\n"),
                             doctest::Contains("empty slot"), ValidationError);
    }
    SUBCASE("unterminated quote") {
        CHECK_THROWS_WITH_AS(submission_from_csv(header + "\"v_0,True,,,,\n"),
                             doctest::Contains("quote"), ValidationError);
    }
    SUBCASE("unknown header") {
        CHECK_THROWS_AS(submission_from_csv("Nope,Nope\n"), ValidationError);
    }
    SUBCASE("overfull row is rejected on write") {
        SubmissionTable table;
        table.slots = 1;
        SubmissionRow row;
        row.hazards = {{"a", ""}, {"b", ""}};
        table.rows[{"v", 0}] = row;
        CHECK_THROWS_AS(submission_to_csv(table), ValidationError);
    }
}
