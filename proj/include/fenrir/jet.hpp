#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace fenrir {

/// Truncated Taylor series a(t) = sum_k coeff[k] t^k, k = 0..order.
///
/// Arithmetic propagates the Taylor coefficients of compositions exactly
/// (up to rounding), which is how higher derivatives of ODE solutions are
/// obtained for the initial state of the solver.
class Jet {
 public:
  static constexpr int kMaxOrder = 12;

  Jet() = default;
  explicit Jet(int order, double value = 0.0) : order_(order) {
    coeff_.fill(0.0);
    coeff_[0] = value;
  }

  /// The independent variable t + shift, i.e. coefficients [shift, 1, 0, ...].
  static Jet variable(int order, double shift) {
    Jet j(order, shift);
    if (order >= 1) j.coeff_[1] = 1.0;
    return j;
  }

  int order() const { return order_; }
  double operator[](int k) const { return coeff_[k]; }
  double& operator[](int k) { return coeff_[k]; }
  double value() const { return coeff_[0]; }

  Jet operator-() const {
    Jet r(order_);
    for (int k = 0; k <= order_; ++k) r.coeff_[k] = -coeff_[k];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k <= order_; ++k) coeff_[k] += o.coeff_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k <= order_; ++k) coeff_[k] -= o.coeff_[k];
    return *this;
  }
  Jet& operator+=(double s) {
    coeff_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    coeff_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (int k = 0; k <= order_; ++k) coeff_[k] *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.order_);
    for (int k = 0; k <= a.order_; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= k; ++j) acc += a.coeff_[j] * b.coeff_[k - j];
      r.coeff_[k] = acc;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r(a.order_);
    for (int k = 0; k <= a.order_; ++k) {
      double acc = a.coeff_[k];
      for (int j = 1; j <= k; ++j) acc -= b.coeff_[j] * r.coeff_[k - j];
      r.coeff_[k] = acc / b.coeff_[0];
    }
    return r;
  }

  friend Jet operator/(double s, const Jet& b) { return Jet(b.order_, s) / b; }

  friend Jet sin(const Jet& a) { return sincos(a)[0]; }
  friend Jet cos(const Jet& a) { return sincos(a)[1]; }

  friend Jet exp(const Jet& a) {
    Jet e(a.order_, std::exp(a.coeff_[0]));
    for (int k = 1; k <= a.order_; ++k) {
      double acc = 0.0;
      for (int j = 1; j <= k; ++j) acc += j * a.coeff_[j] * e.coeff_[k - j];
      e.coeff_[k] = acc / k;
    }
    return e;
  }

 private:
  // s' = a' c, c' = -a' s, expanded coefficient-wise.
  static std::array<Jet, 2> sincos(const Jet& a) {
    Jet s(a.order_, std::sin(a.coeff_[0]));
    Jet c(a.order_, std::cos(a.coeff_[0]));
    for (int k = 1; k <= a.order_; ++k) {
      double as = 0.0, ac = 0.0;
      for (int j = 1; j <= k; ++j) {
        as += j * a.coeff_[j] * c.coeff_[k - j];
        ac += j * a.coeff_[j] * s.coeff_[k - j];
      }
      s.coeff_[k] = as / k;
      c.coeff_[k] = -ac / k;
    }
    return {s, c};
  }

  int order_ = 0;
  std::array<double, kMaxOrder + 1> coeff_{};
};

}  // namespace fenrir
