#pragma once

#include <stdexcept>

namespace dkt {

// Base class for every recoverable error raised by this library.
struct DktError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension disagreement between operands; message names both shapes.
struct ShapeError : DktError {
  using DktError::DktError;
};

// Malformed dataset file; message carries the offending line number.
struct ParseError : DktError {
  using DktError::DktError;
};

// An operation received zero usable inputs (empty batch, empty metric).
struct EmptyInputError : DktError {
  using DktError::DktError;
};

// The metric is undefined for this input (e.g. single-class AUC); kept
// distinct from EmptyInputError so callers can tell the cases apart.
struct UndefinedMetricError : DktError {
  using DktError::DktError;
};

}  // namespace dkt
