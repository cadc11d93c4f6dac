#pragma once

#include <stdexcept>
#include <string>

namespace cfr {

// Error taxonomy shared by the library and the CLI. The CLI maps each
// category to a stable process exit code (see tools/).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad spec fields, bad hyperparameters, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Rejection sampling exhausted its candidate budget.
class GenerationStallError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite losses or parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data: parse failures, dimension mismatches,
// cross-file consistency violations.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfr
