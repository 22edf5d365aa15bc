#pragma once

#include <stdexcept>
#include <string>

namespace vsam {

// Shape disagreement between operands (message names both shapes).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input that is structurally valid but has no defined result
// (all-masked vector, empty token list, empty dataset).
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematical domain violation (log of a non-positive value).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// API contract violation (non-scalar loss, bad class index, L < 1).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// NaN/Inf encountered where a finite value is required.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing, unreadable, or malformed beyond recovery.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vsam
