#include "gridstab/error.hpp"

#include <sstream>

namespace gridstab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::HeaderMismatch: return "HeaderMismatch";
        case ErrorKind::RowParseError: return "RowParseError";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::BadFraction: return "BadFraction";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::BadRange: return "BadRange";
        case ErrorKind::BadResolution: return "BadResolution";
        case ErrorKind::BadProfile: return "BadProfile";
        case ErrorKind::BadScenario: return "BadScenario";
        case ErrorKind::UnknownCustomerInSet: return "UnknownCustomerInSet";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::BadBinCount: return "BadBinCount";
        case ErrorKind::EmptyNode: return "EmptyNode";
        case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorKind::BadParams: return "BadParams";
        case ErrorKind::NonFiniteData: return "NonFiniteData";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::EmptyTestSet: return "EmptyTestSet";
        case ErrorKind::TooManyPartitions: return "TooManyPartitions";
        case ErrorKind::BadSizes: return "BadSizes";
        case ErrorKind::BadSettings: return "BadSettings";
        case ErrorKind::BadConfig: return "BadConfig";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

namespace {

std::string join(const std::vector<std::string>& cols) {
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    return out;
}

}  // namespace

HeaderMismatchError::HeaderMismatchError(std::vector<std::string> expected,
                                         std::vector<std::string> found)
    : Error(ErrorKind::HeaderMismatch,
            "header mismatch: expected [" + join(expected) + "], found [" + join(found) + "]"),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

RowParseError::RowParseError(std::size_t row, std::string column, const std::string& detail)
    : Error(ErrorKind::RowParseError,
            "row " + std::to_string(row) + ", column " + column + ": " + detail),
      row_(row),
      column_(std::move(column)) {}

InvariantViolationError::InvariantViolationError(std::size_t row, std::string rule,
                                                 const std::string& detail)
    : Error(ErrorKind::InvariantViolation,
            "row " + std::to_string(row) + " violates " + rule + ": " + detail),
      row_(row),
      rule_(std::move(rule)) {}

UnknownLabelError::UnknownLabelError(std::string value, std::size_t row)
    : Error(ErrorKind::UnknownLabel,
            "unknown label '" + value + "' at row " + std::to_string(row)),
      value_(std::move(value)),
      row_(row) {}

namespace {

std::string convergence_message(double gradient_norm, std::size_t iterations) {
    std::ostringstream os;
    os << "no convergence after " << iterations << " iterations (gradient norm "
       << gradient_norm << ")";
    return os.str();
}

}  // namespace

NoConvergenceError::NoConvergenceError(double gradient_norm, std::size_t iterations)
    : Error(ErrorKind::NoConvergence, convergence_message(gradient_norm, iterations)),
      gradient_norm_(gradient_norm),
      iterations_(iterations) {}

}  // namespace gridstab
