#pragma once

#include <stdexcept>
#include <string>

namespace cid {

// Linear-algebra failures that survive the configured numerical rescue.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files, schema violations and version mismatches.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked on a state that does not admit it (e.g. exhausted budget).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Configuration document problems; `where()` is a `section.key` path or a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace cid
