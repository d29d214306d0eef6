#include "hazpipe/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

std::vector<bool> ReactionSeries::values() const {
    std::vector<bool> out(static_cast<size_t>(length), false);
    if (step) std::fill(out.begin() + *step, out.end(), true);
    return out;
}

ReactionSeries ReactionSeries::from_values(std::string video_id, const std::vector<bool>& values) {
    ReactionSeries out;
    out.video_id = std::move(video_id);
    out.length = static_cast<int>(values.size());
    for (int i = 0; i < out.length; ++i) {
        if (values[i]) {
            out.step = i;
            break;
        }
    }
    if (out.step) {
        for (int i = *out.step; i < out.length; ++i) {
            if (!values[i])
                throw ValidationError("reaction series for " + out.video_id +
                                      " is not a monotone step (drops back to false at frame " +
                                      std::to_string(i) + ")");
        }
    }
    return out;
}

ReactionSeries step_from_breakpoint(std::optional<int> bp, int n, std::string video_id) {
    if (n < 0) throw ValidationError("reaction series length must be non-negative");
    if (bp && (*bp < 0 || *bp >= n)) {
        std::ostringstream msg;
        msg << "breakpoint " << *bp << " outside [0," << n << ")";
        throw ValidationError(msg.str());
    }
    return ReactionSeries{std::move(video_id), n, bp};
}

ReactionSeries baseline_slope_rule(const MotionSeries& signal, int min_window,
                                   double slope_threshold) {
    if (min_window < 2) throw ValidationError("baseline min_window must be >= 2");
    const int n = signal.size();
    ReactionSeries out{signal.video_id, n, std::nullopt};
    if (n < min_window) return out;

    // OLS slope over the prefix [0..i], written as symmetric pairs around the
    // center index: slope = sum d_t (y_t - y_{m-1-t}) / sum 2 d_t^2 with
    // d_t = t - (m-1)/2. Unlike the running-sums form, this keeps the slope
    // exactly zero on constant prefixes and exactly signed on monotone ones,
    // so thresholding at zero cannot be tripped by cancellation noise.
    for (int i = min_window - 1; i < n; ++i) {
        const int m = i + 1;
        const double center = (m - 1) / 2.0;
        double numerator = 0.0;
        double denominator = 0.0;
        for (int t = 0; t < m / 2; ++t) {
            const double d = t - center;
            numerator += d * (signal.values[t] - signal.values[m - 1 - t]);
            denominator += 2.0 * d * d;
        }
        const double slope = numerator / denominator;
        if (slope < slope_threshold) {
            out.step = i;
            break;
        }
    }
    return out;
}

namespace {

int common_length(const std::vector<ReactionSeries>& series) {
    if (series.empty()) throw ValidationError("ensemble needs at least one input series");
    const int n = series.front().length;
    for (const auto& s : series) {
        if (s.length != n)
            throw ValidationError("ensemble inputs differ in length (" + std::to_string(n) +
                                  " vs " + std::to_string(s.length) + ")");
    }
    return n;
}

}  // namespace

ReactionSeries ensemble_or(const std::vector<ReactionSeries>& series) {
    const int n = common_length(series);
    int earliest = n;
    for (const auto& s : series) earliest = std::min(earliest, s.step_or_end());
    ReactionSeries out{series.front().video_id, n, std::nullopt};
    if (earliest < n) out.step = earliest;
    return out;
}

ReactionSeries ensemble_and(const std::vector<ReactionSeries>& series) {
    const int n = common_length(series);
    int latest = 0;
    for (const auto& s : series) latest = std::max(latest, s.step_or_end());
    ReactionSeries out{series.front().video_id, n, std::nullopt};
    if (latest < n) out.step = latest;
    return out;
}

ReactionSeries ensemble_mean_position(const std::vector<ReactionSeries>& series) {
    const int n = common_length(series);
    double sum = 0.0;
    for (const auto& s : series) sum += static_cast<double>(s.step_or_end());
    const double mean = sum / static_cast<double>(series.size());
    // Round half down, then clamp; a mean landing at n means no transition.
    int pos = static_cast<int>(std::ceil(mean - 0.5));
    pos = std::clamp(pos, 0, n);
    ReactionSeries out{series.front().video_id, n, std::nullopt};
    if (pos < n) out.step = pos;
    return out;
}

void write_reaction_csv(const ReactionSeries& series, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw IoError("cannot write reaction CSV: " + path);
    outf << "frame_index,driver_state_changed\n";
    for (int i = 0; i < series.length; ++i)
        outf << i << "," << (series.at(i) ? "True" : "False") << "\n";
    if (!outf) throw IoError("short write: " + path);
}

ReactionSeries read_reaction_csv(const std::string& path, const std::string& video_id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reaction CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "frame_index,driver_state_changed")
        throw ValidationError(path + ": expected header \"frame_index,driver_state_changed\"");
    std::vector<bool> values;
    int expected = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError(path + ": malformed row \"" + line + "\"");
        if (std::stoi(line.substr(0, comma)) != expected)
            throw ValidationError(path + ": frame indices must be contiguous from 0");
        const std::string flag = to_lower(trim(line.substr(comma + 1)));
        if (flag != "true" && flag != "false")
            throw ValidationError(path + ": boolean expected, got \"" + flag + "\"");
        values.push_back(flag == "true");
        ++expected;
    }
    return ReactionSeries::from_values(video_id, values);
}

}  // namespace hazpipe
