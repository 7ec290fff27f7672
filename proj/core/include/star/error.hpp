#pragma once

#include <stdexcept>
#include <string>

namespace star {

enum class ErrorKind {
  Input,
  Domain,
  Parameter,
  Numerical,
  Design,
  State,
  DegenerateData,
  TransformDegeneracy,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception type thrown by every module; `kind()` tells callers which
/// contract was violated without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace star
