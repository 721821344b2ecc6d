// Error taxonomy. Every failure maps to one of three classes so the CLI can
// translate exceptions into exit codes (config=2, data=3, numeric=4).
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nirsgaf {

enum class ErrorClass { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorClass::config, msg) {}
};
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorClass::data, msg) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(ErrorClass::numeric, msg) {}
};

// --- ingest ---------------------------------------------------------------
struct MissingColumn : DataError {
    explicit MissingColumn(const std::string& column)
        : DataError("missing column: " + column), column(column) {}
    std::string column;
};
struct NonNumericCell : DataError {
    NonNumericCell(std::size_t row, std::size_t col, const std::string& text)
        : DataError("non-numeric cell at row " + std::to_string(row) + ", column " +
                    std::to_string(col) + ": \"" + text + "\""),
          row(row), col(col) {}
    std::size_t row;  // 0-based data row (header not counted)
    std::size_t col;  // 0-based column
};
struct MarkerOutOfBounds : DataError {
    MarkerOutOfBounds(std::size_t marker_index, const std::string& why)
        : DataError("marker " + std::to_string(marker_index) + " out of bounds: " + why),
          marker_index(marker_index) {}
    std::size_t marker_index;
};

// --- preprocess -----------------------------------------------------------
struct SingularCoefficients : NumericError {
    explicit SingularCoefficients(const std::string& msg) : NumericError(msg) {}
};
struct InvalidBand : ConfigError {
    explicit InvalidBand(const std::string& msg) : ConfigError(msg) {}
};
struct SeriesTooShort : DataError {
    SeriesTooShort(std::size_t length, std::size_t required)
        : DataError("series of length " + std::to_string(length) + " too short, need > " +
                    std::to_string(required)) {}
};

// --- gaf ------------------------------------------------------------------
struct EmptySeries : DataError {
    EmptySeries() : DataError("empty series") {}
};
struct NonFiniteValue : DataError {
    explicit NonFiniteValue(std::size_t index)
        : DataError("non-finite value at index " + std::to_string(index)), index(index) {}
    std::size_t index;
};
struct TargetTooLarge : ConfigError {
    TargetTooLarge(std::size_t target, std::size_t length)
        : ConfigError("downsample target " + std::to_string(target) + " exceeds series length " +
                      std::to_string(length)) {}
};
struct IoError : DataError {
    explicit IoError(const std::string& msg) : DataError(msg) {}
};

// --- nn / eval ------------------------------------------------------------
struct ShapeMismatch : DataError {
    explicit ShapeMismatch(const std::string& msg) : DataError(msg) {}
};
struct DimensionMismatch : DataError {
    explicit DimensionMismatch(const std::string& msg) : DataError(msg) {}
};
struct NumericalInstability : NumericError {
    explicit NumericalInstability(const std::string& msg) : NumericError(msg) {}
};
struct EmptyDataset : DataError {
    explicit EmptyDataset(const std::string& msg) : DataError(msg) {}
};
struct DegenerateClass : DataError {
    explicit DegenerateClass(const std::string& msg) : DataError(msg) {}
};
struct TooFewSamples : DataError {
    explicit TooFewSamples(const std::string& msg) : DataError(msg) {}
};
struct CorruptModel : DataError {
    explicit CorruptModel(const std::string& msg) : DataError(msg) {}
};

}  // namespace nirsgaf
