#pragma once

#include <stdexcept>
#include <string>

namespace qadsb {

// Error categories. The CLI maps them to exit codes:
// config-flavored -> 1, data-flavored -> 2, training -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Tensor/vector dimension disagreement.
struct ShapeError : ConfigError {
    using ConfigError::ConfigError;
};

// Qubit wire or element index out of range.
struct IndexError : ConfigError {
    using ConfigError::ConfigError;
};

// Operation used before its required state exists (e.g. unfitted standardizer).
struct StateError : ConfigError {
    using ConfigError::ConfigError;
};

struct DataError : Error {
    using Error::Error;
};

// Input file does not match the expected column schema.
struct SchemaError : DataError {
    using DataError::DataError;
};

struct TrainingError : Error {
    using Error::Error;
};

} // namespace qadsb
