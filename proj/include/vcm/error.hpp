#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcm {

// Base of every error the library raises. `kind()` is a stable identifier used
// by the CLI when it emits machine-readable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  std::string_view kind() const noexcept { return kind_; }

 private:
  std::string_view kind_;
};

// M < 2L - 1: no monotone alignment can visit every retained-concept state.
class InfeasibleLength : public Error {
 public:
  explicit InfeasibleLength(const std::string& message)
      : Error("InfeasibleLength", message) {}
};

// Total path probability is zero (or underflowed to zero in linear space).
class DegenerateProbability : public Error {
 public:
  explicit DegenerateProbability(const std::string& message)
      : Error("DegenerateProbability", message) {}
};

class OracleTooLarge : public Error {
 public:
  explicit OracleTooLarge(const std::string& message)
      : Error("OracleTooLarge", message) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error("DimensionMismatch", message) {}
};

// Malformed input values: probabilities outside [0,1], bad config fields, etc.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("InvalidArgument", message) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message)
      : Error("ParseError", message) {}
};

}  // namespace vcm
