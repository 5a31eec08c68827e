#pragma once

// Square-root (Cholesky-factor) forms of the Gaussian prediction, backward
// kernel and conditioning steps shared by the solver and the regression.
// Every covariance is carried as a lower-triangular factor L with cov = L L^T.

#include "fenrir/types.hpp"

namespace fenrir::sqrt_ops {

/// Relative threshold on the diagonal of a triangular factor below which it
/// is treated as singular and a pseudo-inverse is used.
inline constexpr double kSingularTol = 1e-11;

/// Overwrites `a` with the R factor of its QR decomposition (zeros below
/// the diagonal). Diagonal signs are arbitrary. `top_triangular` declares
/// that the leading rows already form an upper-triangular block, which is
/// exploited to skip known zeros.
void reduce_to_upper(Eigen::Ref<Matrix> a, Eigen::Index top_triangular = 0);

/// Lower factor of A^T A for a stacked pre-array A (any number of rows).
Matrix triangularize(const Eigen::Ref<const Matrix>& pre);

/// Result of pushing N(mean, L L^T) through x' = A x + offset + N(0, N N^T),
/// together with the reverse kernel x | x' ~ N(mean + G (x' - pred), P P^T).
struct PredictResult {
  Vector mean;
  Matrix cov_sqrt;
  Matrix gain;        ///< G
  Matrix noise_sqrt;  ///< P factor
  bool pseudo_inverse = false;
};

/// Forward push-forward only (no reverse kernel).
void predict(const Vector& mean, const Matrix& cov_sqrt, const Matrix& a, const Vector* offset,
             const Matrix& noise_sqrt, Vector& mean_out, Matrix& cov_sqrt_out);

PredictResult predict_with_gain(const Vector& mean, const Matrix& cov_sqrt, const Matrix& a,
                                const Vector* offset, const Matrix& noise_sqrt);

/// Conditioning of N(mean, L L^T) on obs = M x + N(0, R R^T), observed value `target`.
struct UpdateResult {
  Vector mean;
  Matrix cov_sqrt;
  Vector residual;   ///< target - M mean
  Matrix innov_chol; ///< upper U with S = U^T U
  double log_det_innov = 0.0;
  double mahalanobis = 0.0;  ///< residual^T S^-1 residual
  bool jittered = false;
  bool pseudo_inverse = false;
};

enum class SingularPolicy {
  Throw,          ///< jitter once, then raise NumericalError
  PseudoInverse,  ///< jitter once, then fall back to a pseudo-inverse gain
};

/// noise_sqrt may be empty (zero observation noise).
UpdateResult update(const Vector& mean, const Matrix& cov_sqrt, const Matrix& obs_matrix,
                    const Vector& target, const Matrix& noise_sqrt, SingularPolicy policy);

/// Solves U X = B for upper-triangular U; falls back to the minimum-norm
/// least-squares solution when U is numerically singular.
Matrix solve_upper(const Eigen::Ref<const Matrix>& u, const Eigen::Ref<const Matrix>& b, bool* pseudo);

bool triangular_singular(const Eigen::Ref<const Matrix>& u, double rel_tol = kSingularTol);

}  // namespace fenrir::sqrt_ops
