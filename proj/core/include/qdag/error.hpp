#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qdag {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input", what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class SearchError : public Error {
 public:
  explicit SearchError(const std::string& what) : Error("search", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

/// Thrown by topological_order on cyclic input; carries one offending cycle
/// as a node sequence c0 <- c1 <- ... <- c0 (0-based).
class CycleError : public Error {
 public:
  CycleError(const std::string& what, std::vector<int> cycle)
      : Error("cycle", what), cycle_(std::move(cycle)) {}
  const std::vector<int>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<int> cycle_;
};

}  // namespace qdag
