#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace astr {

// Violated precondition or broken postcondition between components.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite arithmetic or an iteration safeguard that fired.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The trust-region loop cannot make a measurable step: trial points are
// indistinguishable from the current point at floating-point resolution.
class StepStall : public NumericError {
 public:
  using NumericError::NumericError;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Malformed binary input (bad magic, truncated stream).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace astr
