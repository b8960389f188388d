#pragma once

#include <stdexcept>
#include <string>

namespace cfb {

/// Root of the library's exception hierarchy. The CLI maps the three
/// branches onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Two dense trajectories observed on different grids.
class GridMismatchError : public DataError {
 public:
  using DataError::DataError;
};

/// Treatments of different kinds (dense vs sample set) or base kernels mixed.
class RepresentationError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid argument to a numerical routine (bad dimensions, bandwidth, grid).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A factorization, solve or optimization could not be carried out.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfb
