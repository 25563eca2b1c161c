#pragma once

#include <stdexcept>
#include <string>

namespace textae {

// Operand shapes do not match (matrix dimensions, vector lengths).
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An index is outside the addressed range.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Input violates a mathematical precondition (empty matrix, negative mass,
// single-class labels, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Invalid configuration value or combination. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite parameter. CLI exit code 4.
struct DivergenceError : std::runtime_error {
    std::size_t epoch;
    std::size_t batch;
    DivergenceError(std::size_t epoch_, std::size_t batch_)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) +
                             ", batch " + std::to_string(batch_)),
          epoch(epoch_), batch(batch_) {}
};

}  // namespace textae
