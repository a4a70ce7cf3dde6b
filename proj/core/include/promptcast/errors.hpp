#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace promptcast {

/// Root of the library's exception hierarchy.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad run configuration: unknown keys, invalid values, missing files.
struct ConfigError : Error {
    using Error::Error;
};

/// Structural problem in an input trace. Maps to exit code 2 in the CLI.
struct DataError : Error {
    using Error::Error;
};

struct MissingColumn : DataError {
    explicit MissingColumn(std::string column_name)
        : DataError("missing column: " + column_name), column(std::move(column_name)) {}
    std::string column;
};

struct UnparsableCell : DataError {
    UnparsableCell(std::size_t row_index, std::string column_name)
        : DataError("unparsable cell at row " + std::to_string(row_index) + ", column " +
                    column_name),
          row(row_index),
          column(std::move(column_name)) {}
    std::size_t row;
    std::string column;
};

struct TraceTooShort : DataError {
    using DataError::DataError;
};

struct InvalidSeries : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct SchemaMismatch : Error {
    using Error::Error;
};

struct EmptyPool : Error {
    using Error::Error;
};

struct MTooLarge : Error {
    using Error::Error;
};

struct MissingEr : Error {
    explicit MissingEr(int index)
        : Error("no precomputed error rate for pool index " + std::to_string(index)),
          pool_index(index) {}
    int pool_index;
};

struct WindowTooLarge : Error {
    using Error::Error;
};

struct WindowTooSmall : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct ZeroVariance : Error {
    using Error::Error;
};

/// Failures raised by the completion backend. Each kind surfaces distinctly
/// so callers can account for infrastructure faults separately from model
/// misbehaviour.
struct BackendError : Error {
    using Error::Error;
};

struct Timeout : BackendError {
    using BackendError::BackendError;
};

struct HttpError : BackendError {
    explicit HttpError(int http_status)
        : BackendError("http status " + std::to_string(http_status)), status(http_status) {}
    int status;
};

struct RetriesExhausted : BackendError {
    using BackendError::BackendError;
};

}  // namespace promptcast
