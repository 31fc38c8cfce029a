#pragma once

#include <stdexcept>
#include <string>

namespace comatch {

// Error taxonomy shared by every module. The CLI maps these onto exit codes
// (config/usage -> 2, data -> 3, environment -> 4).

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RangeError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct InsufficientDataError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct CompletenessError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct EnvironmentError : Error {
  using Error::Error;
};

}  // namespace comatch
