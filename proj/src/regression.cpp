#include "fenrir/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fenrir/sqrt_ops.hpp"

namespace fenrir {
namespace {

// Lower factor of a PSD noise covariance; semidefinite input goes through LDLT.
Matrix noise_factor(const Matrix& r) {
  if (r.rows() != r.cols()) throw InvalidArgument("noise covariance must be square");
  if (!r.isApprox(r.transpose(), 1e-12)) throw InvalidArgument("noise covariance must be symmetric");
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(r);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw InvalidArgument("noise covariance must be positive semidefinite");
  Matrix half = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return sqrt_ops::triangularize(half.transpose());
}

// The chain expressed in scaled coordinates x = diag(s) x_s with the diffusion
// ratio folded into the noise factors.
struct ScaledChain {
  const BackwardMarkovChain& chain;
  Vector s;
  Vector s_inv;
  double c;

  ScaledChain(const BackwardMarkovChain& ch, double kappa)
      : chain(ch), s(ch.scale), s_inv(ch.scale.cwiseInverse()), c(std::sqrt(kappa / ch.kappa_applied)) {}

  Matrix gain(int i) const { return s_inv.asDiagonal() * chain.gains[i] * s.asDiagonal(); }
  Vector offset(int i) const { return chain.offsets[i].cwiseProduct(s_inv); }
  Matrix noise(int i) const { return c * (s_inv.asDiagonal() * chain.noise_sqrt[i]); }
};

struct Pass {
  double nll = 0.0;
  std::vector<Vector> residuals;
  std::vector<Matrix> innovation_cov;
  // Filter moments after the update at each node and the backward prediction
  // into node n from node n + 1, both in scaled coordinates.
  std::vector<GaussianBelief> filtered;
  std::vector<Vector> predicted_mean;
  std::vector<Matrix> smoother_gain;
  std::vector<Matrix> smoother_noise;
};

void check_inputs(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa) {
  chain.validate();
  obs.validate(chain.dim);
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("diffusion must be positive and finite");
}

Pass run_backward_filter(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa,
                         const Matrix& noise_cov, bool keep) {
  check_inputs(chain, obs, kappa);
  const int k = obs.obs_dim();
  if (noise_cov.rows() != k) throw InvalidArgument("noise covariance does not match observation dimension");
  const Matrix noise_sqrt = noise_factor(noise_cov);
  const std::vector<int> node_of = align_observations(chain, obs);

  const int nodes = chain.size();
  const int n = chain.state_dim();
  const int d = chain.dim;
  ScaledChain sc(chain, kappa);

  // Observation rows act on E0^T x = diag(s_0) E0^T x_s.
  Matrix obs_matrix = Matrix::Zero(k, n);
  obs_matrix.leftCols(d) = obs.H * sc.s.head(d).asDiagonal();

  // Observations grouped by node, processed in input order within a node.
  std::vector<int> order(obs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return node_of[a] > node_of[b]; });

  Pass pass;
  pass.residuals.resize(obs.size());
  pass.innovation_cov.resize(obs.size());
  if (keep) {
    pass.filtered.resize(nodes);
    pass.predicted_mean.resize(nodes);
    pass.smoother_gain.resize(nodes);
    pass.smoother_noise.resize(nodes);
  }

  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Vector mean = chain.terminal_mean.cwiseProduct(sc.s_inv);
  Matrix cov_sqrt = sc.c * (sc.s_inv.asDiagonal() * chain.terminal_cov_sqrt);

  // Work buffers for the allocation-free path taken when no smoother
  // quantities are kept.
  Matrix pre_update(k + n, k + n);
  Matrix pre_predict(2 * n, n);
  Matrix g(n, n);
  Vector z(n), v(k), e(k), m2(n);
  const bool noise_triangular = noise_sqrt.isLowerTriangular(0.0);

  size_t next = 0;
  for (int node = nodes - 1; node >= 0; --node) {
    while (next < order.size() && node_of[order[next]] == node) {
      const int j = order[next++];
      if (keep) {
        sqrt_ops::UpdateResult up = sqrt_ops::update(mean, cov_sqrt, obs_matrix, obs.values[j], noise_sqrt,
                                                     sqrt_ops::SingularPolicy::Throw);
        pass.nll += 0.5 * (k * log_2pi + up.log_det_innov + up.mahalanobis);
        pass.residuals[j] = std::move(up.residual);
        pass.innovation_cov[j] = up.innov_chol.transpose() * up.innov_chol;
        mean = std::move(up.mean);
        cov_sqrt = std::move(up.cov_sqrt);
        continue;
      }
      // [[R^T, 0], [(M L)^T, L^T]] = Q [[X, Y], [0, Z]], S = X^T X.
      pre_update.topLeftCorner(k, k) = noise_sqrt.transpose();
      pre_update.topRightCorner(k, n).setZero();
      pre_update.bottomLeftCorner(n, k).noalias() = cov_sqrt.transpose() * obs_matrix.transpose();
      pre_update.bottomRightCorner(n, n) = cov_sqrt.transpose();
      sqrt_ops::reduce_to_upper(pre_update, noise_triangular ? k : 0);
      const auto x_fac = pre_update.topLeftCorner(k, k);
      if (sqrt_ops::triangular_singular(x_fac)) {
        // Rare; the general routine jitters before giving up.
        sqrt_ops::UpdateResult up = sqrt_ops::update(mean, cov_sqrt, obs_matrix, obs.values[j], noise_sqrt,
                                                     sqrt_ops::SingularPolicy::Throw);
        pass.nll += 0.5 * (k * log_2pi + up.log_det_innov + up.mahalanobis);
        pass.residuals[j] = std::move(up.residual);
        mean = std::move(up.mean);
        cov_sqrt = std::move(up.cov_sqrt);
        continue;
      }
      e = obs.values[j];
      e.noalias() -= obs_matrix * mean;
      v = e;
      x_fac.transpose().triangularView<Eigen::Lower>().solveInPlace(v);
      pass.nll += 0.5 * (k * log_2pi + 2.0 * x_fac.diagonal().cwiseAbs().array().log().sum() + v.squaredNorm());
      pass.residuals[j] = e;
      mean.noalias() += pre_update.block(0, k, k, n).transpose() * v;
      cov_sqrt = pre_update.bottomRightCorner(n, n).transpose();
    }
    if (keep) pass.filtered[node] = {mean, cov_sqrt};
    if (node == 0) break;

    const int i = node - 1;
    if (keep) {
      const Matrix gk = sc.gain(i);
      const Vector zk = sc.offset(i);
      const Matrix pk = sc.noise(i);
      sqrt_ops::PredictResult pr = sqrt_ops::predict_with_gain(mean, cov_sqrt, gk, &zk, pk);
      pass.predicted_mean[i] = pr.mean;
      pass.smoother_gain[node] = std::move(pr.gain);
      pass.smoother_noise[node] = std::move(pr.noise_sqrt);
      mean = std::move(pr.mean);
      cov_sqrt = std::move(pr.cov_sqrt);
    } else {
      // [[P^T], [(G L)^T]] with P lower triangular.
      g.noalias() = sc.s_inv.asDiagonal() * chain.gains[i] * sc.s.asDiagonal();
      z = chain.offsets[i].cwiseProduct(sc.s_inv);
      pre_predict.topRows(n).noalias() = sc.c * (chain.noise_sqrt[i].transpose() * sc.s_inv.asDiagonal());
      pre_predict.bottomRows(n).noalias() = cov_sqrt.transpose() * g.transpose();
      sqrt_ops::reduce_to_upper(pre_predict, n);
      m2 = z;
      m2.noalias() += g * mean;
      mean.swap(m2);
      cov_sqrt = pre_predict.topRows(n).transpose();
    }
    if (!mean.allFinite() || !cov_sqrt.allFinite())
      throw NumericalError("regression: non-finite moments at node " + std::to_string(node - 1));
  }
  if (!std::isfinite(pass.nll)) throw NumericalError("regression: non-finite negative log-likelihood");
  return pass;
}

}  // namespace

void ObservationSet::validate(int d) const {
  if (values.size() != times.size()) throw InvalidArgument("observations: times and values differ in length");
  if (H.cols() != d) throw InvalidArgument("observations: H must have d columns");
  for (const Vector& v : values) {
    if (v.size() != H.rows()) throw InvalidArgument("observations: value dimension does not match H");
    if (!v.allFinite()) throw InvalidArgument("observations: non-finite value");
  }
}

std::vector<int> align_observations(const BackwardMarkovChain& chain, const ObservationSet& obs) {
  std::vector<int> node_of(obs.size());
  for (int j = 0; j < obs.size(); ++j) {
    const double t = obs.times[j];
    auto it = std::lower_bound(chain.grid.begin(), chain.grid.end(), t);
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    int best = -1;
    if (it != chain.grid.end() && std::abs(*it - t) <= tol) best = static_cast<int>(it - chain.grid.begin());
    if (best < 0 && it != chain.grid.begin() && std::abs(*(it - 1) - t) <= tol)
      best = static_cast<int>(it - chain.grid.begin()) - 1;
    if (best < 0)
      throw InvalidArgument("observation time " + std::to_string(t) + " is not a node of the solver grid");
    node_of[j] = best;
  }
  return node_of;
}

double fenrir_nll(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa,
                  const Matrix& noise_cov) {
  return run_backward_filter(chain, obs, kappa, noise_cov, false).nll;
}

RegressionResult fenrir_posterior(const BackwardMarkovChain& chain, const ObservationSet& obs, double kappa,
                                  const Matrix& noise_cov) {
  Pass pass = run_backward_filter(chain, obs, kappa, noise_cov, true);
  const int nodes = chain.size();
  const int n = chain.state_dim();
  const Vector& s = chain.scale;

  // Forward-in-time smoothing: x_n | x_{n-1} ~ N(mu_n + G_n (x_{n-1} - mu^+_{n-1}), P_n).
  std::vector<GaussianBelief> scaled(nodes);
  scaled[0] = pass.filtered[0];
  Matrix pre(2 * n, n);
  for (int node = 1; node < nodes; ++node) {
    const Matrix& g = pass.smoother_gain[node];
    scaled[node].mean = pass.filtered[node].mean;
    scaled[node].mean.noalias() += g * (scaled[node - 1].mean - pass.predicted_mean[node - 1]);
    pre.topRows(n).noalias() = (g * scaled[node - 1].cov_sqrt).transpose();
    pre.bottomRows(n) = pass.smoother_noise[node].transpose();
    scaled[node].cov_sqrt = sqrt_ops::triangularize(pre);
  }

  RegressionResult out;
  out.nll = pass.nll;
  out.residuals = std::move(pass.residuals);
  out.innovation_cov = std::move(pass.innovation_cov);
  out.posterior.resize(nodes);
  for (int node = 0; node < nodes; ++node) {
    out.posterior[node].mean = scaled[node].mean.cwiseProduct(s);
    out.posterior[node].cov_sqrt = s.asDiagonal() * scaled[node].cov_sqrt;
  }
  return out;
}

}  // namespace fenrir
