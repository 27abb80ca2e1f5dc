#pragma once

#include <stdexcept>
#include <string>

namespace regm {

/// Raised on violated preconditions and numerical failures (singular
/// systems, non-PD covariances, ambiguous subgradients).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Usage / configuration problems; the CLI maps these to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace regm
