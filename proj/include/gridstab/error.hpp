#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridstab {

enum class ErrorKind {
    MissingFile,
    HeaderMismatch,
    RowParseError,
    InvariantViolation,
    UnknownLabel,
    BadFraction,
    TooFewSamples,
    EmptyDataset,
    BadRange,
    BadResolution,
    BadProfile,
    BadScenario,
    UnknownCustomerInSet,
    LengthMismatch,
    ZeroVariance,
    DegenerateInput,
    EmptyInput,
    BadBinCount,
    EmptyNode,
    EmptyTrainingSet,
    BadParams,
    NonFiniteData,
    NoConvergence,
    NonFiniteLoss,
    SchemaMismatch,
    EmptyTestSet,
    TooManyPartitions,
    BadSizes,
    BadSettings,
    BadConfig,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. `kind()` is the
/// machine-readable tag the CLI prints; `what()` is the human message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class HeaderMismatchError : public Error {
public:
    HeaderMismatchError(std::vector<std::string> expected, std::vector<std::string> found);

    const std::vector<std::string>& expected() const noexcept { return expected_; }
    const std::vector<std::string>& found() const noexcept { return found_; }

private:
    std::vector<std::string> expected_;
    std::vector<std::string> found_;
};

// Rows are 1-based data-row numbers (the header is not counted).
class RowParseError : public Error {
public:
    RowParseError(std::size_t row, std::string column, const std::string& detail);

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

class InvariantViolationError : public Error {
public:
    InvariantViolationError(std::size_t row, std::string rule, const std::string& detail);

    std::size_t row() const noexcept { return row_; }
    const std::string& rule() const noexcept { return rule_; }

private:
    std::size_t row_;
    std::string rule_;
};

class UnknownLabelError : public Error {
public:
    UnknownLabelError(std::string value, std::size_t row);

    const std::string& value() const noexcept { return value_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string value_;
    std::size_t row_;
};

class NoConvergenceError : public Error {
public:
    NoConvergenceError(double gradient_norm, std::size_t iterations);

    double gradient_norm() const noexcept { return gradient_norm_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double gradient_norm_;
    std::size_t iterations_;
};

}  // namespace gridstab
