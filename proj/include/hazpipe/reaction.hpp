#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hazpipe/signals.hpp"

namespace hazpipe {

/**
 * Monotone boolean driver-state series: false up to a step frame, true from
 * it onward. Stored as (length, optional step index) so the step invariant
 * holds by construction; an absent step means all-false.
 */
struct ReactionSeries {
    std::string video_id;
    int length = 0;
    std::optional<int> step;  // first true frame

    bool at(int i) const { return step.has_value() && i >= *step; }
    std::vector<bool> values() const;

    /// Step index with the "no transition" convention of one past the end.
    int step_or_end() const { return step.value_or(length); }

    /// Validates the monotone step shape; throws ValidationError otherwise.
    static ReactionSeries from_values(std::string video_id, const std::vector<bool>& values);
};

/// False before bp, true from bp on; absent bp gives all-false.
ReactionSeries step_from_breakpoint(std::optional<int> bp, int n, std::string video_id = {});

/**
 * Baseline rule: over each growing prefix [0..i] (i >= min_window-1) fit an
 * ordinary least-squares line against the frame index; the first prefix whose
 * slope drops below slope_threshold sets the step. Series shorter than
 * min_window never flag.
 */
ReactionSeries baseline_slope_rule(const MotionSeries& signal, int min_window,
                                   double slope_threshold);

ReactionSeries ensemble_or(const std::vector<ReactionSeries>& series);
ReactionSeries ensemble_and(const std::vector<ReactionSeries>& series);

/**
 * Mean-position ensemble: every input contributes its first-true index, n
 * when it never transitions; the output steps at the mean position rounded
 * half down. A mean of n (every input silent) gives all-false.
 */
ReactionSeries ensemble_mean_position(const std::vector<ReactionSeries>& series);

/// CSV export/import, header "frame_index,driver_state_changed".
void write_reaction_csv(const ReactionSeries& series, const std::string& path);
ReactionSeries read_reaction_csv(const std::string& path, const std::string& video_id);

}  // namespace hazpipe
