#pragma once

#include <stdexcept>
#include <string>

namespace losstomo {

// Bad user input: malformed files, inconsistent options, invalid subsets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tree-spec parse failure. Carries the 1-based line number (0 when the
// problem is global, e.g. node 0 has the wrong number of children).
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ConfigError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Exponential enumerations refused above their configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fisher information / variance formula evaluated at a singular point.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace losstomo
