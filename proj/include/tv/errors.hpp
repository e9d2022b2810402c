#pragma once

#include <stdexcept>
#include <string>

namespace tv {

// Domain-rule breakage (bad score range, empty claim sets, unreachable
// tier states). Distinct from backend failures, which carry a BackendError.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyClaimSet : ValidationError {
    EmptyClaimSet() : ValidationError("empty claim set") {}
    explicit EmptyClaimSet(const std::string& what) : ValidationError(what) {}
};

struct InvalidTierState : ValidationError {
    InvalidTierState() : ValidationError("unreachable tier state (trusted not done, general done)") {}
};

enum class BackendErrorKind {
    transport,
    quota_exhausted,
    schema_invalid_after_retries,
    empty_response,
};

inline const char* to_string(BackendErrorKind k) {
    switch (k) {
        case BackendErrorKind::transport: return "transport";
        case BackendErrorKind::quota_exhausted: return "quota_exhausted";
        case BackendErrorKind::schema_invalid_after_retries: return "schema_invalid_after_retries";
        case BackendErrorKind::empty_response: return "empty_response";
    }
    return "unknown";
}

struct BackendError {
    BackendErrorKind kind = BackendErrorKind::transport;
    std::string detail;
    bool retryable = false;  // quota_exhausted is never retryable within a run
};

struct BackendException : std::runtime_error {
    BackendError error;
    explicit BackendException(BackendError e)
        : std::runtime_error(std::string(to_string(e.kind)) + ": " + e.detail),
          error(std::move(e)) {}
};

}  // namespace tv
