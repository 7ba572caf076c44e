#pragma once

#include <stdexcept>
#include <string>

namespace srw {

// Exit-code contract: usage -> 1, data/config -> 2, numeric failure -> 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Forward/backward mismatch: the model stepped since the trace was recorded.
struct StaleTraceError : std::runtime_error {
    explicit StaleTraceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace srw
