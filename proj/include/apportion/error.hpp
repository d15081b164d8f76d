#pragma once

#include <stdexcept>
#include <string>

namespace apportion {

/// Validation, calibration and rule errors. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system and parse failures on input files. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace apportion
