#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fenrir {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument (shape, range, ordering) was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a usable result, e.g. an
/// innovation covariance that is not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The probabilistic solver produced a non-finite state. Estimation code
/// maps this onto a penalty value instead of aborting.
class SolverDivergence : public NumericalError {
 public:
  SolverDivergence(int step, double time, const std::string& detail)
      : NumericalError(detail), step_(step), time_(time) {}
  int step() const { return step_; }
  double time() const { return time_; }

 private:
  int step_;
  double time_;
};

/// Closed interval used for parameter bounds.
struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lower && x <= upper; }
  bool finite() const { return std::isfinite(lower) && std::isfinite(upper); }
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace fenrir
