#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpm {

/// Invalid configuration or submission (CLI exit code 1).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Problem too large for an exhaustive method.
class SizeError : public std::length_error {
public:
  using std::length_error::length_error;
};

/// Hash-chain corruption (CLI exit code 2).
class IntegrityError : public std::runtime_error {
public:
  IntegrityError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

}  // namespace mpm
