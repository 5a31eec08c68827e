#include "fenrir/sqrt_ops.hpp"

#include <algorithm>
#include <cmath>

namespace fenrir::sqrt_ops {
namespace {

bool lower_triangular(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 1; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (m(i, j) != 0.0) return false;
  return true;
}

// Number of leading columns of a factor after dropping all-zero trailing
// columns (the solver's noise-free updates leave d of them).
Eigen::Index active_cols(const Matrix& f) {
  Eigen::Index c = f.cols();
  while (c > 0 && f.col(c - 1).isZero(0.0)) --c;
  return c;
}

}  // namespace

void reduce_to_upper(Eigen::Ref<Matrix> a, Eigen::Index top_triangular) {
  // Householder reflections applied in place; Q is never formed. The
  // pre-arrays here are small, where plain column loops beat blocked QR.
  // Rows [0, top_triangular) are upper triangular on entry, so the
  // reflector for column k < top_triangular only touches row k and the rows
  // below that block.
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  const Eigen::Index t = std::min({top_triangular, m, n});
  const Eigen::Index steps = std::min(m, n);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Eigen::Index lo = k < t ? t : k + 1;
    double* col = a.col(k).data();
    double tail = 0.0;
    for (Eigen::Index i = lo; i < m; ++i) tail += col[i] * col[i];
    if (tail == 0.0) continue;
    const double alpha = col[k];
    const double norm = std::sqrt(alpha * alpha + tail);
    const double beta = alpha > 0.0 ? -norm : norm;
    const double inv = 1.0 / (alpha - beta);
    for (Eigen::Index i = lo; i < m; ++i) col[i] *= inv;
    const double tau = (beta - alpha) / beta;
    const Eigen::Index len = m - lo;
    const Eigen::Map<const Eigen::VectorXd> v(col + lo, len);
    for (Eigen::Index j = k + 1; j < n; ++j) {
      double* cj = a.col(j).data();
      Eigen::Map<Eigen::VectorXd> x(cj + lo, len);
      const double w = tau * (v.dot(x) + cj[k]);
      cj[k] -= w;
      x -= w * v;
    }
    col[k] = beta;
    for (Eigen::Index i = lo; i < m; ++i) col[i] = 0.0;
  }
}

bool triangular_singular(const Eigen::Ref<const Matrix>& u, double rel_tol) {
  if (u.rows() == 0) return false;
  const Vector diag = u.diagonal().cwiseAbs();
  const double mx = diag.maxCoeff();
  return !(mx > 0.0) || diag.minCoeff() <= rel_tol * mx;
}

Matrix solve_upper(const Eigen::Ref<const Matrix>& u, const Eigen::Ref<const Matrix>& b, bool* pseudo) {
  if (!triangular_singular(u)) {
    if (pseudo) *pseudo = false;
    return u.triangularView<Eigen::Upper>().solve(b);
  }
  if (pseudo) *pseudo = true;
  Matrix upper = u.triangularView<Eigen::Upper>();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(upper);
  cod.setThreshold(kSingularTol);
  return cod.solve(b);
}

Matrix triangularize(const Eigen::Ref<const Matrix>& pre) {
  const Eigen::Index n = pre.cols();
  Matrix work = pre;
  reduce_to_upper(work);
  Matrix lower = Matrix::Zero(n, n);
  const Eigen::Index r = std::min(pre.rows(), n);
  lower.leftCols(r) = work.topRows(r).transpose();
  return lower;
}

void predict(const Vector& mean, const Matrix& cov_sqrt, const Matrix& a, const Vector* offset,
             const Matrix& noise_sqrt, Vector& mean_out, Matrix& cov_sqrt_out) {
  const Eigen::Index n = mean.size();
  mean_out.noalias() = a * mean;
  if (offset) mean_out += *offset;
  const Eigen::Index r = noise_sqrt.cols();
  // Stacked as [N^T; (A L)^T] so a lower-triangular N keeps the top block triangular.
  const Eigen::Index c = active_cols(cov_sqrt);
  Matrix pre(r + c, n);
  pre.topRows(r) = noise_sqrt.transpose();
  pre.bottomRows(c).noalias() = cov_sqrt.leftCols(c).transpose() * a.transpose();
  reduce_to_upper(pre, lower_triangular(noise_sqrt) ? r : 0);
  cov_sqrt_out = Matrix::Zero(n, n);
  const Eigen::Index rows = std::min(r + c, n);
  cov_sqrt_out.leftCols(rows) = pre.topRows(rows).transpose();
}

PredictResult predict_with_gain(const Vector& mean, const Matrix& cov_sqrt, const Matrix& a,
                                const Vector* offset, const Matrix& noise_sqrt) {
  const Eigen::Index n = mean.size();
  const Eigen::Index r = noise_sqrt.cols();
  PredictResult out;
  out.mean.noalias() = a * mean;
  if (offset) out.mean += *offset;

  // [[ N^T, 0 ], [ (A L)^T, L^T ]] = Q [[R1, R12], [0, R2]] gives
  // R1^T R1 = A S A^T + N N^T, G^T = R1^-1 R12 and P = R2^T R2.
  const Eigen::Index c = active_cols(cov_sqrt);
  Matrix pre = Matrix::Zero(r + c, 2 * n);
  pre.block(0, 0, r, n) = noise_sqrt.transpose();
  pre.block(r, 0, c, n).noalias() = cov_sqrt.leftCols(c).transpose() * a.transpose();
  pre.block(r, n, c, n) = cov_sqrt.leftCols(c).transpose();
  reduce_to_upper(pre, lower_triangular(noise_sqrt) ? r : 0);

  // Rows of R beyond the pre-array height are zero.
  const Eigen::Index top = std::min<Eigen::Index>(r + c, n);
  const Eigen::Index bottom = std::max<Eigen::Index>(0, std::min<Eigen::Index>(r + c, 2 * n) - n);
  Matrix r1 = Matrix::Zero(n, n), r12 = Matrix::Zero(n, n);
  r1.topRows(top) = pre.block(0, 0, top, n);
  r12.topRows(top) = pre.block(0, n, top, n);
  out.cov_sqrt = r1.transpose();
  out.gain = solve_upper(r1, r12, &out.pseudo_inverse).transpose();
  out.noise_sqrt = Matrix::Zero(n, n);
  out.noise_sqrt.leftCols(bottom) = pre.block(n, n, bottom, n).transpose();
  if (out.pseudo_inverse) {
    // S - G Pred G^T = R2^T R2 + E^T E with E = R12 - R1 G^T, the part of
    // R12 outside the range of a singular R1.
    Matrix stacked(2 * n, n);
    stacked.topRows(n) = out.noise_sqrt.transpose();
    stacked.bottomRows(n) = r12 - r1 * out.gain.transpose();
    out.noise_sqrt = triangularize(stacked);
  }
  return out;
}

namespace {

struct Factorised {
  Matrix x, y, z;
};

Factorised factor_update(const Matrix& cov_sqrt, const Matrix& obs_matrix, const Matrix& noise_sqrt,
                         double jitter) {
  const Eigen::Index n = cov_sqrt.rows();
  const Eigen::Index k = obs_matrix.rows();
  const Eigen::Index r = noise_sqrt.size() == 0 ? 0 : noise_sqrt.cols();
  const Eigen::Index extra = jitter > 0.0 ? k : 0;
  const Eigen::Index c = active_cols(cov_sqrt);
  Matrix pre = Matrix::Zero(r + extra + c, k + n);
  if (r > 0) pre.block(0, 0, r, k) = noise_sqrt.transpose();
  if (extra > 0) pre.block(r, 0, k, k).diagonal().setConstant(std::sqrt(jitter));
  pre.block(r + extra, 0, c, k).noalias() = cov_sqrt.leftCols(c).transpose() * obs_matrix.transpose();
  pre.block(r + extra, k, c, n) = cov_sqrt.leftCols(c).transpose();

  const bool tri = r > 0 && extra == 0 && r == k && lower_triangular(noise_sqrt);
  reduce_to_upper(pre, tri ? r : 0);
  const Eigen::Index rows = std::min(pre.rows(), k + n);
  Matrix rr = Matrix::Zero(k + n, k + n);
  rr.topRows(rows) = pre.topRows(rows);
  return {rr.block(0, 0, k, k), rr.block(0, k, k, n), rr.block(k, k, n, n)};
}

}  // namespace

UpdateResult update(const Vector& mean, const Matrix& cov_sqrt, const Matrix& obs_matrix,
                    const Vector& target, const Matrix& noise_sqrt, SingularPolicy policy) {
  const Eigen::Index k = obs_matrix.rows();
  UpdateResult out;
  Factorised f = factor_update(cov_sqrt, obs_matrix, noise_sqrt, 0.0);
  if (triangular_singular(f.x)) {
    const double trace = f.x.squaredNorm();
    const double jitter = 1e-12 * trace / static_cast<double>(k);
    out.jittered = true;
    if (jitter > 0.0) f = factor_update(cov_sqrt, obs_matrix, noise_sqrt, jitter);
    if (triangular_singular(f.x)) {
      if (policy == SingularPolicy::Throw)
        throw NumericalError("innovation covariance is not positive definite");
      out.pseudo_inverse = true;
    }
  }

  out.residual = target - obs_matrix * mean;
  Vector w;
  if (!out.pseudo_inverse) {
    w = f.x.transpose().triangularView<Eigen::Lower>().solve(out.residual);
  } else {
    Matrix lower = f.x.transpose().triangularView<Eigen::Lower>();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lower);
    cod.setThreshold(kSingularTol);
    w = cod.solve(out.residual);
  }
  out.mean = mean;
  out.mean.noalias() += f.y.transpose() * w;
  out.cov_sqrt = f.z.transpose();
  out.mahalanobis = w.squaredNorm();
  out.log_det_innov = 2.0 * f.x.diagonal().cwiseAbs().array().log().sum();
  out.innov_chol = std::move(f.x);
  return out;
}

}  // namespace fenrir::sqrt_ops
