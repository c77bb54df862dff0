// Exception hierarchy shared across the library. The C API maps these to
// status codes at the boundary.
#pragma once

#include <stdexcept>
#include <string>

namespace crtre {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (dimensions, thresholds, enum values).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed input files; carries a human-readable location in the message.
struct ParseError : Error {
    using Error::Error;
};

// Missing/mismatched columns or incompatible dataset shapes.
struct SchemaError : Error {
    using Error::Error;
};

// A linear system could not be solved to a finite answer.
struct SingularSystemError : Error {
    using Error::Error;
};

// An iterative solve produced non-finite values.
struct DivergenceError : Error {
    using Error::Error;
};

// A metric is undefined on the given input (zero support, constant vector).
struct UndefinedMetricError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace crtre
