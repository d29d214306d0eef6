#pragma once

#include <stdexcept>
#include <string>

namespace hazpipe {

// Input data or configuration violates a documented contract. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem or decode failure. CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A captioner / classifier service could not be reached or answered badly,
// including after retries. CLI exit code 3.
class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hazpipe
