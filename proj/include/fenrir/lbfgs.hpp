#pragma once

#include <functional>
#include <vector>

#include "fenrir/types.hpp"

namespace fenrir {

using ScalarFunction = std::function<double(const Vector&)>;

enum class FitStatus { Converged, Stalled, MaxIter };
const char* to_string(FitStatus status);

struct LbfgsOptions {
  int max_iter = 500;
  int memory = 8;
  double f_rel_tol = 1e-9;   ///< stop when |f_k - f_{k+1}| < f_rel_tol (1 + |f_{k+1}|)
  double g_inf_tol = 1e-6;   ///< stop when ||g||_inf < g_inf_tol
  double fd_rel_step = 1e-6; ///< finite-difference step h_i = fd_rel_step * max(1, |x_i|)
  /// Values at or above this are failed evaluations; finite differences
  /// avoid them where possible.
  double penalty = 1e10;
  /// Cap on ||x_{k+1} - x_k||_inf per iteration.
  double max_step = 5.0;
};

/// Central finite-difference gradient. A coordinate whose forward or
/// backward evaluation fails falls back to the one-sided difference on the
/// good side, and to zero when both fail.
Vector fd_gradient(const ScalarFunction& f, const Vector& x, double fx, double rel_step, double penalty,
                   int* evaluations = nullptr);

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  std::vector<double> trace;  ///< f at the start and after every iteration
  FitStatus status = FitStatus::MaxIter;
  int iterations = 0;
  int evaluations = 0;
};

/// Limited-memory BFGS with Armijo backtracking on an unconstrained problem.
/// Curvature pairs with s^T y <= 1e-10 ||s|| ||y|| are skipped. Returns the
/// best point seen; `Stalled` when the line search cannot make progress
/// before a convergence test passes.
LbfgsResult lbfgs_minimize(const ScalarFunction& f, const Vector& x0, const LbfgsOptions& options = {});

}  // namespace fenrir
