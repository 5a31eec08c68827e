#pragma once

#include <vector>

#include "fenrir/pnsolver.hpp"
#include "fenrir/types.hpp"

namespace fenrir {

/// Measurements u(t) = H y(t) + v(t), v ~ N(0, R), on a set of times.
///
/// H is stored as the k x d matrix applied to the state (the transpose of
/// the d x k convention H^T y).
struct ObservationSet {
  std::vector<double> times;
  std::vector<Vector> values;
  Matrix H;

  int size() const { return static_cast<int>(times.size()); }
  int obs_dim() const { return static_cast<int>(H.rows()); }
  /// Shapes and finiteness; d is the ODE dimension.
  void validate(int d) const;
};

struct RegressionResult {
  double nll = 0.0;
  /// Posterior marginals at every chain node, in grid order.
  std::vector<GaussianBelief> posterior;
  /// Innovation u - H E0^T mean and its covariance, per observation.
  std::vector<Vector> residuals;
  std::vector<Matrix> innovation_cov;
};

/// Chain node index of every observation; throws InvalidArgument when an
/// observation time is not a grid node.
std::vector<int> align_observations(const BackwardMarkovChain& chain, const ObservationSet& obs);

/// Negative log marginal likelihood of the data under the chain, by the
/// prediction-error decomposition of a filter running backwards in time.
double fenrir_nll(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa,
                  const Matrix& noise_cov);

/// fenrir_nll plus the posterior marginals from a forward-in-time smoothing pass.
RegressionResult fenrir_posterior(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa,
                                  const Matrix& noise_cov);

}  // namespace fenrir
