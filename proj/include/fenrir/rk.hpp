#pragma once

#include <vector>

#include "fenrir/models.hpp"
#include "fenrir/regression.hpp"
#include "fenrir/types.hpp"
#include "fenrir/vector_field.hpp"

namespace fenrir {

/// Raised when the explicit integrator cannot continue (step-size underflow,
/// step budget exhausted, non-finite state).
class RkFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct RkOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  /// > 0 switches off error control and takes uniform steps of this size.
  double fixed_step = 0.0;
  /// Times the integrator steps onto exactly (e.g. measurement times).
  std::vector<double> stop_times;
  long max_steps = 200000;
};

/// Tolerances used for ground-truth trajectories.
inline RkOptions truth_rk_options() {
  RkOptions o;
  o.abs_tol = 1e-9;
  o.rel_tol = 1e-7;
  return o;
}

/// Accepted steps of a Dormand-Prince 5(4) run with cubic Hermite
/// interpolation between them.
class RkSolution {
 public:
  RkSolution() = default;
  RkSolution(std::vector<double> times, std::vector<Vector> states, std::vector<Vector> slopes, double abs_tol,
             double rel_tol, int rejected);

  /// Dense output; throws InvalidArgument outside [t_begin, t_end].
  Vector at(double t) const;

  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  int accepted_steps() const { return static_cast<int>(times_.size()) - 1; }
  int rejected_steps() const { return rejected_; }
  double abs_tol() const { return abs_tol_; }
  double rel_tol() const { return rel_tol_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& states() const { return states_; }

 private:
  std::vector<double> times_;
  std::vector<Vector> states_;
  std::vector<Vector> slopes_;
  double abs_tol_ = 0.0;
  double rel_tol_ = 0.0;
  int rejected_ = 0;
};

RkSolution rk_solve(const VectorField& field, const Vector& theta, const Vector& y0, double t0, double t1,
                    const RkOptions& options = {});

/// Sum of squared residuals ||H y_hat(t) - u(t)||^2 over the observations,
/// with y_hat the RK trajectory at (params, init). Integration failure gives +inf.
double rk_lsq_loss(const BenchmarkProblem& problem, const Vector& params, const Vector& init,
                   const ObservationSet& obs, const RkOptions& options = {});

}  // namespace fenrir
