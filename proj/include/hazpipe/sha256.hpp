#pragma once

#include <string>
#include <string_view>

namespace hazpipe {

/// SHA-256 digest of the input, lowercase hex.
std::string sha256_hex(std::string_view data);

}  // namespace hazpipe
