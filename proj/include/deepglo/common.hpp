#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace deepglo {

/// Row-major so that row i of a series matrix is series i, contiguous in time.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unknown configuration key/value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Dimension or precondition violation on an API call.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepglo
