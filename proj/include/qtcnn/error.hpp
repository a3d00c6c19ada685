#pragma once

#include <stdexcept>
#include <string>

namespace qtcnn {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violations: bad indices, shape mismatches, out-of-range values.
struct InvalidArgument : Error {
    using Error::Error;
};

// The QNN register cannot hold the requested parameter count (2^N < M).
struct CapacityError : Error {
    using Error::Error;
};

// Operation invoked without the forward cache it depends on.
struct StateError : Error {
    using Error::Error;
};

// Non-finite loss or gradients.
struct NumericError : Error {
    using Error::Error;
};

// File-system failures.
struct IoError : Error {
    using Error::Error;
};

// Malformed cell content (reported with row/column).
struct ParseError : Error {
    using Error::Error;
};

// Structurally unusable input: wrong columns, wrong class count, bad manifest.
struct SchemaError : Error {
    using Error::Error;
};

}  // namespace qtcnn
