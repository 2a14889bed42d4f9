#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtctrl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivisionByZero : Error {
  using Error::Error;
};

struct SyntaxError : Error {
  std::size_t position;
  SyntaxError(std::size_t pos, const std::string& what)
      : Error("syntax error at offset " + std::to_string(pos) + ": " + what), position(pos) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonIntegerExponent : Error {
  using Error::Error;
};

struct NonFiniteResult : Error {
  using Error::Error;
};

struct NewtonDivergence : Error {
  using Error::Error;
};

struct SingularJacobian : Error {
  using Error::Error;
};

struct DegenerateInput : Error {
  using Error::Error;
};

struct LambdaNotInAnnihilator : Error {
  using Error::Error;
};

struct ConditionIIIFails : Error {
  using Error::Error;
};

struct KernelViolation : Error {
  using Error::Error;
};

}  // namespace dtctrl
