#pragma once

#include <stdexcept>
#include <string>

namespace pocscan {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transient transport failure; the caller may retry.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The remote side asked us to slow down.
struct RateLimitError : std::runtime_error {
    explicit RateLimitError(const std::string& msg, int retry_after_s = 0)
        : std::runtime_error(msg), retry_after_seconds(retry_after_s) {}
    int retry_after_seconds;
};

struct UnsupportedLanguageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pocscan
