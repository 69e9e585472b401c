#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace shiftlens {

// Samples are rows, features are columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error taxonomy. The CLI maps these to exit codes; library callers can catch
// the base type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed cell content (bad number, non-integer label).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid file: ragged rows, missing columns, bad header.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between otherwise valid inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its valid range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Request exceeds an enumeration cap (use the sampling estimator instead).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// External model bridge produced output violating the batch protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace shiftlens
