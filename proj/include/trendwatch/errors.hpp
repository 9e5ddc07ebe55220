#pragma once

#include <stdexcept>
#include <string>

namespace trendwatch {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A computation was asked for outside its domain (e.g. an empty table).
struct DomainError : Error {
    using Error::Error;
};

/// Invalid input supplied by a caller.
struct ValidationError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

/// A compare-and-set write lost: the target is no longer in the expected state.
struct ConflictError : Error {
    using Error::Error;
};

/// An external dependency failed in a way that may succeed on retry.
struct RetryableError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace trendwatch
