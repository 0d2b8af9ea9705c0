#pragma once

#include <stdexcept>
#include <string>

namespace dcms {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, shape mismatches, out-of-range arguments.
/// The CLI maps it to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested statistic (constant pixels,
/// zero bandwidth). The CLI maps it to exit code 3.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcms
