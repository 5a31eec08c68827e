#pragma once

#include <vector>

#include "fenrir/linearize.hpp"
#include "fenrir/prior.hpp"
#include "fenrir/types.hpp"
#include "fenrir/vector_field.hpp"

namespace fenrir {

/// N(mean, cov_sqrt cov_sqrt^T).
struct GaussianBelief {
  Vector mean;
  Matrix cov_sqrt;

  Matrix covariance() const { return cov_sqrt * cov_sqrt.transpose(); }
};

/// Probabilistic-solver posterior as a Gauss-Markov process running
/// backwards in time (the physics-enhanced prior):
///
///   x(t_N)       ~ N(terminal_mean, k * terminal_cov),
///   x(t_n) | x(t_{n+1}) ~ N(G_n x(t_{n+1}) + zeta_n, k * P_n),
///
/// where k = kappa / kappa_applied rescales the stored factors. Node 0 is the
/// initial time t0, whose state is deterministic (G_0 = 0, P_0 = 0).
struct BackwardMarkovChain {
  int order = 0;  ///< nu
  int dim = 0;    ///< d
  std::vector<double> grid;
  Vector terminal_mean;
  Matrix terminal_cov_sqrt;
  std::vector<Matrix> gains;       ///< G_n, n = 0..size()-2
  std::vector<Vector> offsets;     ///< zeta_n
  std::vector<Matrix> noise_sqrt;  ///< P_n factor
  double kappa_applied = 1.0;
  /// Coordinate scaling used by downstream square-root recursions so that
  /// triangular factors have comparable magnitudes across derivative orders.
  Vector scale;

  int size() const { return static_cast<int>(grid.size()); }
  int state_dim() const { return dim * (order + 1); }
  /// Throws InvalidArgument when array lengths or shapes are inconsistent.
  void validate() const;
};

struct SolveDiagnostics {
  std::vector<double> residual_before;  ///< ||E1^T mu^- - f(E0^T mu^-)||_inf per step
  std::vector<double> residual_after;   ///< ||C^T mu - b||_inf per step
  double min_innovation_eig = std::numeric_limits<double>::infinity();
  int steps = 0;
  int jitter_count = 0;
  int pseudo_inverse_count = 0;
  bool degraded_init = false;
};

struct SolverOptions {
  Linearization mode = Linearization::EK1;
  double kappa = 1.0;
  double t0 = 0.0;
  bool keep_filter = false;
  /// Residuals and innovation eigenvalues per step (cheap, but not free).
  bool diagnostics = true;
};

struct SolveResult {
  BackwardMarkovChain chain;
  SolveDiagnostics diagnostics;
  std::vector<GaussianBelief> filtered;  ///< nodes 0..N, only with keep_filter
};

struct PredictionStep {
  GaussianBelief predicted;
  Matrix gain;        ///< G
  Matrix noise_sqrt;  ///< P factor
  bool pseudo_inverse = false;
};

/// Prior prediction over one transition with diffusion kappa, and the
/// backward kernel (G, P) linking the predicted state to the input state.
PredictionStep predict(const GaussianBelief& belief, const TransitionModel& trans, double kappa);

struct UpdateStep {
  GaussianBelief filtered;
  Vector residual;  ///< e = b - C^T mu^-
  Matrix innovation_cov;
  bool jittered = false;
  bool pseudo_inverse = false;
};

/// Noise-free conditioning on C^T x = b. `scale` optionally names a diagonal
/// coordinate scaling to work in (see TransitionModel::scale).
UpdateStep update(const GaussianBelief& predicted, const AffineObservation& obs,
                  const Vector* scale = nullptr);

/// Filters the ODE constraint over `grid` (strictly increasing, all > t0) and
/// returns the backward representation over {t0} + grid.
SolveResult solve_ivp(const VectorField& field, const Vector& theta, const Vector& y0,
                      const IwpPrior& prior, const std::vector<double>& grid,
                      const SolverOptions& options = {});

/// Marginals of the chain at every node (the RTS smoother output).
std::vector<GaussianBelief> smooth(const BackwardMarkovChain& chain);

/// Uniform grid t0 + k dt up to t_end merged with `required` times; times
/// closer than 1e-6 dt to a required time snap to it. Excludes t0.
std::vector<double> solver_grid(double t0, double t_end, double dt, const std::vector<double>& required);

}  // namespace fenrir
