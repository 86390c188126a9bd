#pragma once

#include <stdexcept>
#include <string>

namespace mdk {

// Shape or size violation in a tensor operation.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: recipe schema, out-of-range hyperparameter, missing input.
// Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training-time abort (non-finite loss or gradient, corrupt checkpoint).
// Maps to CLI exit code 3.
class TrainAbort : public std::runtime_error {
 public:
  explicit TrainAbort(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mdk
