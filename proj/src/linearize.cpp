#include "fenrir/linearize.hpp"

#include <algorithm>
#include <cctype>

namespace fenrir {

const char* to_string(Linearization mode) { return mode == Linearization::EK0 ? "ek0" : "ek1"; }

Linearization parse_linearization(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ek0") return Linearization::EK0;
  if (s == "ek1") return Linearization::EK1;
  throw InvalidArgument("unknown linearisation '" + name + "' (expected ek0 or ek1)");
}

Vector information_residual(const VectorField& field, const Vector& theta, double t, const Vector& x,
                            const IwpPrior& prior) {
  if (x.size() != prior.state_dim()) throw InvalidArgument("information_residual: state dimension mismatch");
  if (field.dim() != prior.dim()) throw InvalidArgument("information_residual: field/prior dimension mismatch");
  const int d = prior.dim();
  return x.segment(d, d) - field.eval(t, x.head(d), theta);
}

AffineObservation linearize(const VectorField& field, const Vector& theta, double t,
                            const Vector& y_tilde, Linearization mode, const IwpPrior& prior) {
  const int d = prior.dim();
  if (field.dim() != d || y_tilde.size() != d) throw InvalidArgument("linearize: dimension mismatch");

  AffineObservation obs;
  const Vector f = field.eval(t, y_tilde, theta);
  if (!f.allFinite()) throw NumericalError("linearize: non-finite vector field value");
  if (mode == Linearization::EK0) {
    obs.L = Matrix::Zero(d, d);
    obs.b = f;
  } else {
    obs.L = field.jacobian(t, y_tilde, theta);
    if (!obs.L.allFinite()) throw NumericalError("linearize: non-finite Jacobian");
    obs.b = f - obs.L * y_tilde;
  }
  obs.C = Matrix::Zero(prior.state_dim(), d);
  obs.C.middleRows(d, d).setIdentity();
  obs.C.topRows(d) = -obs.L.transpose();
  return obs;
}

}  // namespace fenrir
