#include "fenrir/prior.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fenrir {
namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Expands a (nu+1) x (nu+1) matrix to the block layout, i.e. A kron I_d.
Matrix kron_identity(const Matrix& a, int d) {
  Matrix out = Matrix::Zero(a.rows() * d, a.cols() * d);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      if (a(i, k) != 0.0)
        for (int j = 0; j < d; ++j) out(i * d + j, k * d + j) = a(i, k);
  return out;
}

// Q_s is a Hilbert-type matrix; the factorisation runs in extended precision.
Matrix scaled_q_cholesky(int nu) {
  const int n = nu + 1;
  std::vector<long double> a(n * n), l(n * n, 0.0L);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = 1.0L / static_cast<long double>(2 * nu + 1 - i - j);
  for (int j = 0; j < n; ++j) {
    long double s = a[j * n + j];
    for (int k = 0; k < j; ++k) s -= l[j * n + k] * l[j * n + k];
    if (s <= 0.0L) throw NumericalError("IWP process noise not positive definite for nu = " + std::to_string(nu));
    l[j * n + j] = std::sqrt(s);
    for (int i = j + 1; i < n; ++i) {
      long double t = a[i * n + j];
      for (int k = 0; k < j; ++k) t -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = t / l[j * n + j];
    }
  }
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = static_cast<double>(l[i * n + j]);
  return out;
}

}  // namespace

IwpPrior::IwpPrior(int nu, int d) : nu_(nu), d_(d) {
  if (nu < 1 || nu > 10) throw InvalidArgument("IWP order must lie in [1, 10]");
  if (d < 1) throw InvalidArgument("ODE dimension must be positive");
  Matrix phi1 = Matrix::Zero(nu + 1, nu + 1);
  for (int i = 0; i <= nu; ++i)
    for (int k = i; k <= nu; ++k) phi1(i, k) = binomial(nu - i, k - i);
  scaled_phi_ = kron_identity(phi1, d);
  scaled_q_sqrt_ = kron_identity(scaled_q_cholesky(nu), d);
}

Matrix IwpPrior::projection(int m) const {
  if (m < 0 || m > nu_) throw InvalidArgument("projection: derivative index out of range");
  Matrix e = Matrix::Zero(d_, state_dim());
  for (int j = 0; j < d_; ++j) e(j, index(m, j)) = 1.0;
  return e;
}

Vector IwpPrior::scaling(double h) const {
  Vector s(state_dim());
  const double root = std::sqrt(h);
  for (int m = 0; m <= nu_; ++m) {
    const double v = root * std::pow(h, nu_ - m) / factorial(nu_ - m);
    for (int j = 0; j < d_; ++j) s(index(m, j)) = v;
  }
  return s;
}

TransitionModel iwp_transition(const IwpPrior& prior, double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw InvalidArgument("iwp_transition: step must be finite and >= 0");
  const int nu = prior.order();
  const int d = prior.dim();
  const int n = prior.state_dim();

  Matrix phi1 = Matrix::Zero(nu + 1, nu + 1);
  Matrix q1 = Matrix::Zero(nu + 1, nu + 1);
  for (int i = 0; i <= nu; ++i) {
    for (int k = i; k <= nu; ++k) phi1(i, k) = std::pow(h, k - i) / factorial(k - i);
    for (int j = 0; j <= nu; ++j) {
      const int p = 2 * nu + 1 - i - j;
      q1(i, j) = std::pow(h, p) / (p * factorial(nu - i) * factorial(nu - j));
    }
  }

  TransitionModel tm;
  tm.step = h;
  tm.phi = kron_identity(phi1, d);
  tm.q = kron_identity(q1, d);
  if (h == 0.0) {
    tm.scale = Vector::Ones(n);
    tm.phi_scaled = Matrix::Identity(n, n);
    tm.q_sqrt_scaled = Matrix::Zero(n, n);
    tm.q_sqrt = Matrix::Zero(n, n);
  } else {
    tm.scale = prior.scaling(h);
    tm.phi_scaled = prior.scaled_phi();
    tm.q_sqrt_scaled = prior.scaled_q_sqrt();
    tm.q_sqrt = tm.scale.asDiagonal() * tm.q_sqrt_scaled;
  }
  return tm;
}

InitialState taylor_init(const VectorField& field, const Vector& theta, const Vector& y0, int nu,
                         double t0) {
  const int d = field.dim();
  if (y0.size() != d) throw InvalidArgument("taylor_init: y0 has wrong dimension");
  if (nu < 1 || nu > Jet::kMaxOrder - 1) throw InvalidArgument("taylor_init: unsupported order");

  InitialState init;
  init.x = Vector::Zero(d * (nu + 1));
  init.x.head(d) = y0;

  if (!field.supports_jets()) {
    init.x.segment(d, d) = field.eval(t0, y0, theta);
    init.degraded = nu >= 2;
  } else {
    // Taylor coefficients c_k = y^(k)(t0) / k! satisfy c_{k+1} = [f(t, y(t))]_k / (k + 1).
    std::vector<Jet> y(d, Jet(nu));
    for (int j = 0; j < d; ++j) y[j][0] = y0(j);
    const Jet t = Jet::variable(nu, t0);
    double fact = 1.0;
    for (int k = 0; k < nu; ++k) {
      const std::vector<Jet> f = field.eval_jet(t, y, theta);
      fact *= (k + 1);
      for (int j = 0; j < d; ++j) {
        const double c = f[j][k] / (k + 1);
        y[j][k + 1] = c;
        init.x(d * (k + 1) + j) = c * fact;
      }
    }
  }
  if (!init.x.allFinite()) throw NumericalError("taylor_init: non-finite initial derivatives");
  return init;
}

}  // namespace fenrir
