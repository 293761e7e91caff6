#pragma once

#include <stdexcept>
#include <string>

namespace forma {

// Base for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, thresholds out of range, malformed flags. CLI exit code 1.
struct UsageError : Error {
    using Error::Error;
};

// Malformed or inconsistent input data (misaligned corpora, parse failures,
// missing scores). CLI exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Unreadable or unwritable files.
struct IoError : DataError {
    using DataError::DataError;
};

// A pipeline stage failed; the message names the stage. CLI exit code 3.
struct StageError : Error {
    using Error::Error;
};

}  // namespace forma
