#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace nlst {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Input outside the admissible parameter range (exponents, dimensions, grids).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An iterative solve failed to converge or to bracket a root.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometric input rejected (degenerate samples, fold-over of coordinates).
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The profile equation for h has no admissible root. a_crit is the fold
// location in A at the offending potential value (NaN if none exists).
struct SolvabilityError : std::runtime_error {
  double a_crit;
  SolvabilityError(const std::string& what, double a_crit_)
      : std::runtime_error(what), a_crit(a_crit_) {}
};

// A monotone root search left its valid range.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A linear functional or system is degenerate (vanishing denominator, kernel hit).
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid scenario configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nlst
