#pragma once

#include "fenrir/types.hpp"
#include "fenrir/vector_field.hpp"

namespace fenrir {

/// The nu-times integrated Wiener process in d dimensions.
///
/// The state stacks the solution and its first nu derivatives block-wise,
/// x = [y, y', ..., y^(nu)], so component j of derivative m sits at index
/// m * d + j. The top derivative is driven by a unit-diffusion Wiener process.
class IwpPrior {
 public:
  IwpPrior(int nu, int d);

  int order() const { return nu_; }
  int dim() const { return d_; }
  int state_dim() const { return d_ * (nu_ + 1); }
  int index(int m, int j) const { return m * d_ + j; }

  /// d x D selector of derivative block m.
  Matrix projection(int m) const;

  /// Diagonal of the step-dependent coordinate scaling T(h) under which the
  /// transition becomes independent of h: Phi(h) = T Phi_s T^-1 and
  /// Q(h) = T Q_s T.
  Vector scaling(double h) const;

  /// Phi_s, with binomial entries.
  const Matrix& scaled_phi() const { return scaled_phi_; }
  /// Lower Cholesky factor of Q_s, whose entries are 1 / (2 nu + 1 - i - j).
  const Matrix& scaled_q_sqrt() const { return scaled_q_sqrt_; }

  bool operator==(const IwpPrior& o) const { return nu_ == o.nu_ && d_ == o.d_; }

 private:
  int nu_;
  int d_;
  Matrix scaled_phi_;
  Matrix scaled_q_sqrt_;
};

/// Discrete transition x(t + h) | x(t) ~ N(Phi x(t), kappa Q) of the prior.
struct TransitionModel {
  double step = 0.0;
  Matrix phi;
  Matrix q;
  Matrix q_sqrt;  ///< lower triangular, q = q_sqrt q_sqrt^T
  Vector scale;   ///< T(h); identity when h = 0
  Matrix phi_scaled;
  Matrix q_sqrt_scaled;
};

/// Closed-form transition of the unit-diffusion IWP over a step h >= 0.
TransitionModel iwp_transition(const IwpPrior& prior, double h);

/// Exact stacked derivatives [y0, y0', ..., y0^(nu)] of the IVP solution at t0.
struct InitialState {
  Vector x;
  /// Set when the field has no Taylor-mode evaluation and blocks m >= 2 were
  /// zero-filled.
  bool degraded = false;
};

InitialState taylor_init(const VectorField& field, const Vector& theta, const Vector& y0, int nu,
                         double t0 = 0.0);

}  // namespace fenrir
