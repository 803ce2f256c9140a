#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwkbmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or ill-formed arguments.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Shape mismatches between kernels, responses and states.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or unrecoverable factorization failures during
// inference; carries the name of the offending factor block.
class NumericalError : public Error {
 public:
  NumericalError(std::string factor_name, const std::string& what)
      : Error(factor_name + ": " + what), factor(std::move(factor_name)) {}
  std::string factor;
};

}  // namespace cwkbmf
