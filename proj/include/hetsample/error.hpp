#pragma once

#include <stdexcept>
#include <string>

namespace hetsample {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input (files, CSV cells, image headers).
class IoError : public Error {
public:
  using Error::Error;
};

/// The request cannot be satisfied with the given data and parameters,
/// e.g. a degenerate feature space or a subset size larger than what the
/// sampling set can reach.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

} // namespace hetsample
