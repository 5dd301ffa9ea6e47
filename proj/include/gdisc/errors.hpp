#pragma once

#include <stdexcept>
#include <string>

namespace gdisc {

struct InvalidConfiguration : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateInput : std::domain_error {
  using std::domain_error::domain_error;
};

struct DegenerateProjection : std::domain_error {
  using std::domain_error::domain_error;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when two routes that must agree mathematically disagree numerically.
struct InternalInconsistency : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_same_size(long expected, long actual, const char* what) {
  if (expected != actual) {
    throw ShapeError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                     ", got " + std::to_string(actual));
  }
}

}  // namespace detail
}  // namespace gdisc
