#pragma once

#include <stdexcept>
#include <string>

namespace hdpo {

// Dimension or configuration mismatch between cooperating objects.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (e.g. asked to mutate frozen params).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A request that is well-formed but cannot be satisfied under the current setup.
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hdpo

namespace hdpo {

// Training produced a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace hdpo
