#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace hazpipe {

/// Median with the even-count convention: mean of the two middle values.
double median(std::vector<double> values);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercase, trim, collapse internal whitespace runs to single spaces.
std::string normalize_label(std::string_view s);

/// Shell-style matching with `*` and `?`; used for --videos filters.
bool glob_match(std::string_view pattern, std::string_view text);

/// Shortest decimal form that round-trips a double; used by CSV writers.
std::string format_double(double v);

}  // namespace hazpipe
