#pragma once

#include <string>

#include "fenrir/prior.hpp"
#include "fenrir/vector_field.hpp"

namespace fenrir {

enum class Linearization { EK0, EK1 };
const char* to_string(Linearization mode);
/// "ek0" / "ek1", case-insensitive.
Linearization parse_linearization(const std::string& name);

/// Affine surrogate y' = L y + b of the ODE constraint, with C = E1 - E0 L^T so
/// that the constraint reads C^T x = b.
struct AffineObservation {
  Matrix L;  ///< d x d
  Vector b;  ///< d
  Matrix C;  ///< D x d
};

/// E1^T x - f(t, E0^T x).
Vector information_residual(const VectorField& field, const Vector& theta, double t, const Vector& x,
                            const IwpPrior& prior);

/// Zeroth (L = 0) or first (L = Jacobian) order expansion of the field at y_tilde.
AffineObservation linearize(const VectorField& field, const Vector& theta, double t,
                            const Vector& y_tilde, Linearization mode, const IwpPrior& prior);

}  // namespace fenrir
