#pragma once

#include <stdexcept>
#include <string>

namespace combandit {

/// Invalid configuration: bad shapes, out-of-range hyperparameters, unknown keys.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid data reaching an operation at runtime (non-finite vectors, ragged traces).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an operation's precondition (dimension mismatch, non-unit context).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace combandit
