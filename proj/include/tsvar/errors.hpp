#pragma once

#include <stdexcept>
#include <string>

namespace tsvar {

/// Malformed input: bad construction arguments, parse failures, indices out
/// of range, mismatched scales. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Expression evaluation failure (unbound variable, log of a non-positive
/// value, division by zero, ...). Carries the offending subexpression text.
class EvalError : public std::runtime_error {
public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric procedure failure: root solve or shooting did not converge,
/// singular state. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tsvar
