#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hazpipe {

/// One frame's predictions: the driver flag plus (track, caption) hazards.
struct SubmissionRow {
    bool driver_state_changed = false;
    std::vector<std::pair<std::string, std::string>> hazards;
};

/**
 * Per-frame prediction table. Written as CSV with header
 *   ID,Driver_State_Changed,Hazard_Track_1..S,Hazard_Name_1..S
 * where ID is "{video_id}_{frame_index}" and S is `slots`. Fields are
 * RFC-4180 quoted, so captions may contain commas and quotes.
 */
struct SubmissionTable {
    int slots = 22;
    std::map<std::pair<std::string, int>, SubmissionRow> rows;
};

void write_submission(const SubmissionTable& table, const std::string& path);
std::string submission_to_csv(const SubmissionTable& table);

/// Inverse of write_submission; rejects duplicate IDs, ragged rows, bad
/// booleans, and hazard names without a track.
SubmissionTable read_submission(const std::string& path);
SubmissionTable submission_from_csv(const std::string& csv_text);

}  // namespace hazpipe
