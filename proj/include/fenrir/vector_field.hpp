#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fenrir/jet.hpp"
#include "fenrir/types.hpp"

namespace fenrir {

/// f(t, y) = L y + b for an affine field at a fixed time.
struct AffineForm {
  Matrix L;
  Vector b;
};

/// Right-hand side f_theta(t, y) of an ODE y' = f_theta(t, y).
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual int dim() const = 0;
  virtual int param_dim() const = 0;

  virtual Vector eval(double t, const Vector& y, const Vector& theta) const = 0;
  virtual Matrix jacobian(double t, const Vector& y, const Vector& theta) const = 0;

  /// True when eval_jet is implemented; needed for exact higher-order
  /// initial derivatives.
  virtual bool supports_jets() const { return false; }

  virtual std::vector<Jet> eval_jet(const Jet& t, const std::vector<Jet>& y,
                                    const Vector& theta) const {
    (void)t, (void)y, (void)theta;
    throw InvalidArgument("vector field has no Taylor-mode evaluation");
  }

  /// Exact (L, b) for affine fields, std::nullopt otherwise.
  virtual std::optional<AffineForm> affine(double t, const Vector& theta) const {
    (void)t, (void)theta;
    return std::nullopt;
  }
};

/// Implements eval and eval_jet from a single generic right-hand side
///
///   template <typename T>
///   void rhs(const T& t, std::span<const T> y, const Vector& theta,
///            std::span<T> out) const;
///
/// provided by Derived, so the same expression serves plain evaluation and
/// Taylor-mode differentiation.
template <typename Derived>
class TaylorField : public VectorField {
 public:
  Vector eval(double t, const Vector& y, const Vector& theta) const override {
    check(y, theta);
    Vector out(dim());
    self().template rhs<double>(t, std::span<const double>(y.data(), y.size()), theta,
                                std::span<double>(out.data(), out.size()));
    return out;
  }

  bool supports_jets() const override { return true; }

  std::vector<Jet> eval_jet(const Jet& t, const std::vector<Jet>& y,
                            const Vector& theta) const override {
    if (static_cast<int>(y.size()) != dim()) throw InvalidArgument("eval_jet: state dimension mismatch");
    std::vector<Jet> out(y.size(), Jet(t.order()));
    self().template rhs<Jet>(t, std::span<const Jet>(y), theta, std::span<Jet>(out));
    return out;
  }

 protected:
  void check(const Vector& y, const Vector& theta) const {
    if (y.size() != dim()) throw InvalidArgument("vector field: state dimension mismatch");
    if (theta.size() != param_dim()) throw InvalidArgument("vector field: parameter dimension mismatch");
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

}  // namespace fenrir
