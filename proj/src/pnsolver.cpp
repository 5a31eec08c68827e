#include "fenrir/pnsolver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fenrir/sqrt_ops.hpp"

namespace fenrir {
namespace {

Matrix scale_rows(const Vector& s, const Matrix& m) { return s.asDiagonal() * m; }
Matrix unscale_rows(const Vector& s, const Matrix& m) { return s.cwiseInverse().asDiagonal() * m; }

std::string describe_theta(const Vector& theta) {
  std::ostringstream os;
  os.precision(6);
  os << "theta = [";
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << theta(i);
  os << "]";
  return os.str();
}

}  // namespace

void BackwardMarkovChain::validate() const {
  const int n = state_dim();
  if (grid.empty()) throw InvalidArgument("chain: empty grid");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument("chain: grid not strictly increasing");
  const size_t steps = grid.size() - 1;
  if (gains.size() != steps || offsets.size() != steps || noise_sqrt.size() != steps)
    throw InvalidArgument("chain: per-step arrays must have length size() - 1");
  if (terminal_mean.size() != n || terminal_cov_sqrt.rows() != n || terminal_cov_sqrt.cols() != n)
    throw InvalidArgument("chain: terminal moments have wrong shape");
  if (scale.size() != n) throw InvalidArgument("chain: scale has wrong length");
  for (size_t i = 0; i < steps; ++i) {
    if (gains[i].rows() != n || gains[i].cols() != n || offsets[i].size() != n ||
        noise_sqrt[i].rows() != n || noise_sqrt[i].cols() != n)
      throw InvalidArgument("chain: per-step entry has wrong shape");
  }
  if (!(kappa_applied > 0.0)) throw InvalidArgument("chain: kappa_applied must be positive");
}

PredictionStep predict(const GaussianBelief& belief, const TransitionModel& trans, double kappa) {
  const Eigen::Index n = belief.mean.size();
  if (trans.phi.rows() != n || belief.cov_sqrt.rows() != n)
    throw InvalidArgument("predict: transition does not match state dimension");
  if (!(kappa >= 0.0)) throw InvalidArgument("predict: diffusion must be >= 0");

  const Vector& s = trans.scale;
  const Vector mean_s = belief.mean.cwiseQuotient(s);
  const Matrix cov_s = unscale_rows(s, belief.cov_sqrt);
  const Matrix noise_s = std::sqrt(kappa) * trans.q_sqrt_scaled;
  sqrt_ops::PredictResult r = sqrt_ops::predict_with_gain(mean_s, cov_s, trans.phi_scaled, nullptr, noise_s);

  PredictionStep out;
  out.predicted.mean = r.mean.cwiseProduct(s);
  out.predicted.cov_sqrt = scale_rows(s, r.cov_sqrt);
  out.gain = s.asDiagonal() * r.gain * s.cwiseInverse().asDiagonal();
  out.noise_sqrt = scale_rows(s, r.noise_sqrt);
  out.pseudo_inverse = r.pseudo_inverse;
  return out;
}

UpdateStep update(const GaussianBelief& predicted, const AffineObservation& obs, const Vector* scale) {
  const Eigen::Index n = predicted.mean.size();
  if (obs.C.rows() != n) throw InvalidArgument("update: C must have D rows");
  const Vector s = scale ? *scale : Vector::Ones(n);

  const Vector mean_s = predicted.mean.cwiseQuotient(s);
  const Matrix cov_s = unscale_rows(s, predicted.cov_sqrt);
  const Matrix obs_matrix = (s.asDiagonal() * obs.C).transpose();
  sqrt_ops::UpdateResult r =
      sqrt_ops::update(mean_s, cov_s, obs_matrix, obs.b, Matrix(), sqrt_ops::SingularPolicy::PseudoInverse);

  UpdateStep out;
  out.filtered.mean = r.mean.cwiseProduct(s);
  out.filtered.cov_sqrt = scale_rows(s, r.cov_sqrt);
  out.residual = r.residual;
  out.innovation_cov = r.innov_chol.transpose() * r.innov_chol;
  out.jittered = r.jittered;
  out.pseudo_inverse = r.pseudo_inverse;
  return out;
}

std::vector<double> solver_grid(double t0, double t_end, double dt, const std::vector<double>& required) {
  if (!(dt > 0.0)) throw InvalidArgument("solver_grid: step must be positive");
  std::vector<double> req;
  for (double t : required)
    if (t > t0) req.push_back(t);
  std::sort(req.begin(), req.end());
  if (!req.empty()) t_end = std::max(t_end, req.back());
  const double snap = 1e-6 * dt;

  std::vector<double> uniform;
  const long steps = static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9));
  for (long k = 1; k <= steps; ++k) uniform.push_back(std::min(t0 + k * dt, t_end));

  std::vector<double> out;
  out.reserve(uniform.size() + req.size());
  size_t j = 0;
  for (double t : uniform) {
    while (j < req.size() && req[j] < t - snap) out.push_back(req[j++]);
    if (j < req.size() && std::abs(req[j] - t) <= snap) {
      out.push_back(req[j++]);
    } else {
      out.push_back(t);
    }
  }
  while (j < req.size()) out.push_back(req[j++]);
  out.erase(std::unique(out.begin(), out.end(), [&](double a, double b) { return std::abs(a - b) <= snap; }),
            out.end());
  return out;
}

namespace {

// Per-step-size constants in the scaled coordinates of T(h).
struct ScaledTransition {
  Vector scale;
  Matrix phi;        // Phi_s
  Matrix phi_t;      // Phi_s^T
  Matrix noise_t;    // sqrt(kappa) Q_s^{1/2}^T, upper triangular
};

// Buffers reused across steps so the inner loop does not allocate.
struct StepWork {
  Matrix pre_predict;  // (D + D) x 2D
  Matrix pre_update;   // D x (d + D)
  Matrix gain_t;       // G_s^T
  Matrix obs;          // d x D, C^T diag(s)
  Vector mean_pred;
  Vector residual;
};

}  // namespace

SolveResult solve_ivp(const VectorField& field, const Vector& theta, const Vector& y0, const IwpPrior& prior,
                      const std::vector<double>& grid, const SolverOptions& options) {
  if (field.dim() != prior.dim()) throw InvalidArgument("solve_ivp: field/prior dimension mismatch");
  if (!(options.kappa > 0.0)) throw InvalidArgument("solve_ivp: diffusion must be positive");
  double prev = options.t0;
  for (double t : grid) {
    if (!(t > prev)) throw InvalidArgument("solve_ivp: grid must be strictly increasing and start after t0");
    prev = t;
  }

  const int n = prior.state_dim();
  const int d = prior.dim();
  const size_t steps = grid.size();

  SolveResult out;
  BackwardMarkovChain& chain = out.chain;
  chain.order = prior.order();
  chain.dim = d;
  chain.kappa_applied = options.kappa;
  chain.grid.reserve(steps + 1);
  chain.grid.push_back(options.t0);
  chain.grid.insert(chain.grid.end(), grid.begin(), grid.end());
  chain.gains.reserve(steps);
  chain.offsets.reserve(steps);
  chain.noise_sqrt.reserve(steps);

  SolveDiagnostics& diag = out.diagnostics;
  if (options.diagnostics) {
    diag.residual_before.reserve(steps);
    diag.residual_after.reserve(steps);
  }

  const InitialState init = taylor_init(field, theta, y0, prior.order(), options.t0);
  diag.degraded_init = init.degraded;
  if (options.keep_filter) out.filtered.push_back({init.x, Matrix::Zero(n, n)});

  // The filter runs in the scaled coordinates of the current step; `active`
  // counts the non-zero leading columns of the covariance factor.
  Vector scale = Vector::Ones(n);
  Vector mean = init.x;
  Matrix cov = Matrix::Zero(n, n);
  int active = 0;

  std::map<double, ScaledTransition> transitions;
  // The filter runs at unit diffusion: with a point-mass start and noise-free
  // updates every covariance is proportional to kappa and no mean depends
  // on it, so kappa only rescales the stored factors.
  const double root_kappa = std::sqrt(options.kappa);
  double typical_step = 0.0;
  StepWork w;
  w.pre_predict.resize(2 * n, 2 * n);
  w.pre_update.resize(n, d + n);
  w.obs = Matrix::Zero(d, n);

  for (size_t i = 0; i < steps; ++i) {
    const double t = chain.grid[i + 1];
    const double h = t - chain.grid[i];
    auto it = transitions.find(h);
    if (it == transitions.end()) {
      ScaledTransition st;
      st.scale = prior.scaling(h);
      st.phi = prior.scaled_phi();
      st.phi_t = st.phi.transpose();
      st.noise_t = prior.scaled_q_sqrt().transpose();
      it = transitions.emplace(h, std::move(st)).first;
    }
    const ScaledTransition& tr = it->second;
    typical_step = std::max(typical_step, h);

    if (tr.scale != scale) {
      const Vector ratio = scale.cwiseQuotient(tr.scale);
      mean.array() *= ratio.array();
      cov = ratio.asDiagonal() * cov;
      scale = tr.scale;
    }

    // Prediction with backward kernel:
    // [[ N^T, 0 ], [ (Phi L)^T, L^T ]] = Q [[R1, R12], [0, R2]].
    const int rows = n + active;
    auto pre = w.pre_predict.topRows(rows);
    pre.topLeftCorner(n, n) = tr.noise_t;
    pre.topRightCorner(n, n).setZero();
    pre.block(n, 0, active, n).noalias() = cov.leftCols(active).transpose() * tr.phi_t;
    pre.block(n, n, active, n) = cov.leftCols(active).transpose();
    sqrt_ops::reduce_to_upper(pre, n);
    const auto r1 = pre.topLeftCorner(n, n);
    w.mean_pred.noalias() = tr.phi * mean;

    bool pseudo = false;
    if (!sqrt_ops::triangular_singular(r1)) {
      w.gain_t = pre.topRightCorner(n, n);
      r1.triangularView<Eigen::Upper>().solveInPlace(w.gain_t);
    } else {
      w.gain_t = sqrt_ops::solve_upper(r1, pre.topRightCorner(n, n), &pseudo);
    }

    // Backward kernel in original coordinates.
    Matrix gain = scale.asDiagonal() * w.gain_t.transpose() * scale.cwiseInverse().asDiagonal();
    Vector offset = mean;
    offset.noalias() -= w.gain_t.transpose() * w.mean_pred;
    offset.array() *= scale.array();
    Matrix noise = Matrix::Zero(n, n);
    const int bottom = std::min(active, n);
    noise.leftCols(bottom) = pre.block(n, n, bottom, n).transpose();
    if (pseudo) {
      // Part of R12 outside the range of a singular R1 (see predict_with_gain).
      Matrix stacked(2 * n, n);
      stacked.topRows(n) = noise.transpose();
      stacked.bottomRows(n) = pre.topRightCorner(n, n);
      stacked.bottomRows(n).noalias() -= r1.triangularView<Eigen::Upper>() * w.gain_t;
      noise = sqrt_ops::triangularize(stacked);
    }
    noise = scale.asDiagonal() * noise;

    // Linearise at the predicted mean.
    const Vector y_tilde = w.mean_pred.head(d).cwiseProduct(scale.head(d));
    AffineObservation lin;
    try {
      lin = linearize(field, theta, t, y_tilde, options.mode, prior);
    } catch (const NumericalError& e) {
      throw SolverDivergence(static_cast<int>(i + 1), t,
                             std::string("solve_ivp: ") + e.what() + " at step " + std::to_string(i + 1) +
                                 ", " + describe_theta(theta));
    }
    if (options.diagnostics) {
      const Vector deriv = w.mean_pred.segment(d, d).cwiseProduct(scale.segment(d, d));
      diag.residual_before.push_back((deriv - (lin.L * y_tilde + lin.b)).cwiseAbs().maxCoeff());
    }

    // Update on C^T x = b, i.e. M x_s = b with M = C^T diag(s).
    w.obs.leftCols(d).noalias() = -lin.L * scale.head(d).asDiagonal();
    w.obs.middleCols(d, d) = scale.segment(d, d).asDiagonal();
    w.residual = lin.b;
    w.residual.noalias() -= w.obs * w.mean_pred;

    // [(M Lp)^T, Lp^T] = [R1 M^T, R1] = Q [[X, Y], [0, Z]] with S = X^T X.
    bool jittered = false, pseudo_update = false;
    w.pre_update.leftCols(d).noalias() = r1.triangularView<Eigen::Upper>() * w.obs.transpose();
    w.pre_update.rightCols(n) = r1.triangularView<Eigen::Upper>();
    sqrt_ops::reduce_to_upper(w.pre_update);
    const auto x_fac = w.pre_update.topLeftCorner(d, d);
    double min_eig = std::numeric_limits<double>::infinity();
    if (!sqrt_ops::triangular_singular(x_fac)) {
      Vector v = w.residual;
      x_fac.transpose().triangularView<Eigen::Lower>().solveInPlace(v);
      mean = w.mean_pred;
      mean.noalias() += w.pre_update.topRightCorner(d, n).transpose() * v;
      cov.setZero();
      cov.leftCols(n - d) = w.pre_update.bottomRightCorner(n - d, n).transpose();
      active = n - d;
      if (options.diagnostics) {
        const Matrix innov = x_fac.transpose() * x_fac;
        min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(innov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      }
    } else {
      // Rank-deficient innovation: jitter, then pseudo-inverse.
      const Matrix lp = r1.transpose();
      sqrt_ops::UpdateResult r = sqrt_ops::update(w.mean_pred, lp, w.obs, lin.b, Matrix(),
                                                  sqrt_ops::SingularPolicy::PseudoInverse);
      mean = std::move(r.mean);
      cov = std::move(r.cov_sqrt);
      active = n;
      jittered = r.jittered;
      pseudo_update = r.pseudo_inverse;
      if (options.diagnostics) {
        const Matrix innov = r.innov_chol.transpose() * r.innov_chol;
        min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(innov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      }
    }

    if (!mean.allFinite() || !cov.allFinite() || !gain.allFinite() || !offset.allFinite()) {
      throw SolverDivergence(static_cast<int>(i + 1), t,
                             "solve_ivp: non-finite state at step " + std::to_string(i + 1) + " (t = " +
                                 std::to_string(t) + "), " + describe_theta(theta));
    }
    if (options.diagnostics) {
      diag.residual_after.push_back((w.obs * mean - lin.b).cwiseAbs().maxCoeff());
      diag.min_innovation_eig = std::min(diag.min_innovation_eig, options.kappa * min_eig);
    }
    diag.jitter_count += jittered ? 1 : 0;
    diag.pseudo_inverse_count += (pseudo_update ? 1 : 0) + (pseudo ? 1 : 0);

    chain.gains.push_back(std::move(gain));
    chain.offsets.push_back(std::move(offset));
    chain.noise_sqrt.push_back(root_kappa * noise);
    if (options.keep_filter)
      out.filtered.push_back({mean.cwiseProduct(scale), root_kappa * (scale.asDiagonal() * cov)});
  }
  diag.steps = static_cast<int>(steps);

  chain.terminal_mean = mean.cwiseProduct(scale);
  chain.terminal_cov_sqrt = root_kappa * (scale.asDiagonal() * cov);
  chain.scale = prior.scaling(typical_step > 0.0 ? typical_step : 1.0);
  return out;
}

std::vector<GaussianBelief> smooth(const BackwardMarkovChain& chain) {
  chain.validate();
  const int nodes = chain.size();
  const int n = chain.state_dim();
  std::vector<GaussianBelief> out(nodes);
  out[nodes - 1] = {chain.terminal_mean, chain.terminal_cov_sqrt};
  Matrix pre(2 * n, n);
  for (int i = nodes - 2; i >= 0; --i) {
    const GaussianBelief& next = out[i + 1];
    out[i].mean = chain.offsets[i];
    out[i].mean.noalias() += chain.gains[i] * next.mean;
    pre.topRows(n).noalias() = (chain.gains[i] * next.cov_sqrt).transpose();
    pre.bottomRows(n) = chain.noise_sqrt[i].transpose();
    out[i].cov_sqrt = sqrt_ops::triangularize(pre);
  }
  return out;
}

}  // namespace fenrir
