#pragma once

#include <stdexcept>
#include <string>

namespace sfda {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetFormatError : std::runtime_error {
  explicit DatasetFormatError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidSpecError : std::runtime_error {
  explicit InvalidSpecError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sfda
