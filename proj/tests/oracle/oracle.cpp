#include "oracle.hpp"

#include <cmath>
#include <numbers>

namespace fenrir::oracle {
namespace {

LMatrix widen(const Matrix& m) { return m.cast<long double>(); }
LVector widen(const Vector& v) { return v.cast<long double>(); }

int node_index(const std::vector<double>& times, double t) {
  for (size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<int>(i);
  throw InvalidArgument("oracle: observation time is not a node");
}

struct Stacked {
  LMatrix m;  // rows: observations, cols: stacked state
  LVector u;
  LMatrix r;
};

Stacked stack(const DenseGaussian& joint, const ObservationSet& obs, const Matrix& noise_cov) {
  const int k = obs.obs_dim();
  const int rows = k * obs.size();
  Stacked s{LMatrix::Zero(rows, joint.mean.size()), LVector(rows), LMatrix::Zero(rows, rows)};
  for (int j = 0; j < obs.size(); ++j) {
    const int node = node_index(joint.times, obs.times[j]);
    s.m.block(j * k, node * joint.block, k, obs.H.cols()) = widen(obs.H);
    s.u.segment(j * k, k) = widen(obs.values[j]);
    s.r.block(j * k, j * k, k, k) = widen(noise_cov);
  }
  return s;
}

// Conditioning on m x + noise(r) = u, with r possibly zero.
DenseGaussian condition(const DenseGaussian& joint, const LMatrix& m, const LVector& u, const LMatrix& r) {
  const LMatrix cross = joint.cov * m.transpose();
  const LMatrix s = m * cross + r;
  const Eigen::LDLT<LMatrix> ldlt(s);
  DenseGaussian out = joint;
  out.mean += cross * ldlt.solve(u - m * joint.mean);
  out.cov -= cross * ldlt.solve(cross.transpose());
  out.cov = (0.5L * (out.cov + out.cov.transpose())).eval();
  return out;
}

}  // namespace

Vector DenseGaussian::marginal_mean(int node) const { return mean.segment(node * block, block).cast<double>(); }

Matrix DenseGaussian::marginal_cov(int node) const {
  return cov.block(node * block, node * block, block, block).cast<double>();
}

DenseGaussian densify(const BackwardMarkovChain& chain, double kappa) {
  const int nodes = chain.size();
  const int n = chain.state_dim();
  const long double c = static_cast<long double>(kappa) / chain.kappa_applied;
  DenseGaussian out;
  out.times = chain.grid;
  out.block = n;
  out.mean = LVector::Zero(nodes * n);
  out.cov = LMatrix::Zero(nodes * n, nodes * n);
  const int last = (nodes - 1) * n;
  out.mean.segment(last, n) = widen(chain.terminal_mean);
  const LMatrix lt = widen(chain.terminal_cov_sqrt);
  out.cov.block(last, last, n, n) = c * lt * lt.transpose();
  for (int i = nodes - 2; i >= 0; --i) {
    const LMatrix g = widen(chain.gains[i]);
    const LMatrix p = widen(chain.noise_sqrt[i]);
    const int a = i * n, b = (i + 1) * n, tail = nodes * n - b;
    out.mean.segment(a, n) = g * out.mean.segment(b, n) + widen(chain.offsets[i]);
    // Cov(x_i, x_m) = G Cov(x_{i+1}, x_m) for m > i.
    out.cov.block(a, b, n, tail) = g * out.cov.block(b, b, n, tail);
    out.cov.block(b, a, tail, n) = out.cov.block(a, b, n, tail).transpose();
    out.cov.block(a, a, n, n) = g * out.cov.block(b, b, n, n) * g.transpose() + c * p * p.transpose();
  }
  return out;
}

DenseGaussian iwp_joint(const IwpPrior& prior, const Vector& x0, double t0, const std::vector<double>& grid,
                        double kappa) {
  const int n = prior.state_dim();
  const int nodes = static_cast<int>(grid.size()) + 1;
  DenseGaussian out;
  out.times.push_back(t0);
  out.times.insert(out.times.end(), grid.begin(), grid.end());
  out.block = n;
  out.mean = LVector::Zero(nodes * n);
  out.cov = LMatrix::Zero(nodes * n, nodes * n);
  out.mean.head(n) = widen(x0);
  for (int i = 1; i < nodes; ++i) {
    const TransitionModel tr = iwp_transition(prior, out.times[i] - out.times[i - 1]);
    const LMatrix phi = widen(tr.phi);
    const int a = (i - 1) * n, b = i * n;
    out.mean.segment(b, n) = phi * out.mean.segment(a, n);
    // Cov(x_i, x_m) = Phi Cov(x_{i-1}, x_m) for m < i.
    out.cov.block(b, 0, n, b) = phi * out.cov.block(a, 0, n, b);
    out.cov.block(0, b, b, n) = out.cov.block(b, 0, n, b).transpose();
    out.cov.block(b, b, n, n) = phi * out.cov.block(a, a, n, n) * phi.transpose() +
                                static_cast<long double>(kappa) * widen(tr.q);
  }
  return out;
}

DenseGaussian condition_on_ode(const DenseGaussian& joint, const IwpPrior& prior, const Matrix& l,
                               const Vector& b) {
  const int d = prior.dim();
  const int n = prior.state_dim();
  const int constrained = joint.nodes() - 1;
  const LMatrix c = widen(Matrix(prior.projection(1) - l * prior.projection(0)));
  LMatrix m = LMatrix::Zero(constrained * d, joint.nodes() * n);
  LVector u(constrained * d);
  for (int i = 0; i < constrained; ++i) {
    m.block(i * d, (i + 1) * n, d, n) = c;
    u.segment(i * d, d) = widen(b);
  }
  return condition(joint, m, u, LMatrix::Zero(m.rows(), m.rows()));
}

double dense_nll(const DenseGaussian& joint, const ObservationSet& obs, const Matrix& noise_cov) {
  if (obs.size() == 0) return 0.0;
  const Stacked s = stack(joint, obs, noise_cov);
  const LMatrix cov = s.m * joint.cov * s.m.transpose() + s.r;
  const LVector e = s.u - s.m * joint.mean;
  const Eigen::LLT<LMatrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("oracle: observation covariance is not positive definite");
  const LMatrix lower = llt.matrixL();
  const LVector w = lower.triangularView<Eigen::Lower>().solve(e);
  const long double log_det = 2.0L * lower.diagonal().array().log().sum();
  const long double log_2pi = std::log(2.0L * std::numbers::pi_v<long double>);
  return static_cast<double>(0.5L * (e.size() * log_2pi + log_det + w.squaredNorm()));
}

DenseGaussian dense_posterior(const DenseGaussian& joint, const ObservationSet& obs, const Matrix& noise_cov) {
  if (obs.size() == 0) return joint;
  const Stacked s = stack(joint, obs, noise_cov);
  return condition(joint, s.m, s.u, s.r);
}

double rel_diff(const Matrix& a, const Matrix& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace fenrir::oracle
