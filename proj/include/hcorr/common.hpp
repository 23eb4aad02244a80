#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using index_t = std::ptrdiff_t;

// Coordinates are stored with a fixed capacity of three; `dim` says how many
// components are meaningful.
inline constexpr int max_dim = 3;
using Point = std::array<double, max_dim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (mesh files, config files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Invalid mesh topology or geometry.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Operands whose block structures do not fit together.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Breakdown of a numerical procedure (singular pivots, non-convergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hcorr
