#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fenrir/types.hpp"
#include "fenrir/vector_field.hpp"

namespace fenrir {

// ---------------------------------------------------------------------------
// Vector fields
// ---------------------------------------------------------------------------

/// Lotka-Volterra family, including the wrong-equation candidates used for
/// model selection.
///
///   y1' = a y1 - b y1 y2     (prey: correct)   or   a y1^2 - b y2   (wrong)
///   y2' = -g y2 + d y1 y2    (predator: correct, standard form)
///   y2' = -g y1 + d y1 y2    (predator: correct, alternative printed form)
///   y2' = -g y2              (wrong)
///
/// Parameters are (alpha, beta, gamma[, delta]); delta is absent when the
/// wrong predator equation is used.
class LotkaVolterraField : public TaylorField<LotkaVolterraField> {
 public:
  enum class Prey { Correct, Wrong };
  enum class Predator { Standard, Printed, Wrong };

  LotkaVolterraField(Prey prey = Prey::Correct, Predator predator = Predator::Standard)
      : prey_(prey), predator_(predator) {}

  int dim() const override { return 2; }
  int param_dim() const override { return predator_ == Predator::Wrong ? 3 : 4; }
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;

  Prey prey() const { return prey_; }
  Predator predator() const { return predator_; }

  template <typename T>
  void rhs(const T& /*t*/, std::span<const T> y, const Vector& th, std::span<T> out) const {
    out[0] = prey_ == Prey::Correct ? th(0) * y[0] - th(1) * (y[0] * y[1]) : th(0) * (y[0] * y[0]) - th(1) * y[1];
    switch (predator_) {
      case Predator::Standard: out[1] = -th(2) * y[1] + th(3) * (y[0] * y[1]); break;
      case Predator::Printed: out[1] = -th(2) * y[0] + th(3) * (y[0] * y[1]); break;
      case Predator::Wrong: out[1] = -th(2) * y[1]; break;
    }
  }

 private:
  Prey prey_;
  Predator predator_;
};

/// y1' = c (y1 - y1^3 / 3 + y2), y2' = -(y1 - a - b y2) / c; theta = (a, b, c).
class FitzHughNagumoField : public TaylorField<FitzHughNagumoField> {
 public:
  int dim() const override { return 2; }
  int param_dim() const override { return 3; }
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;

  template <typename T>
  void rhs(const T& /*t*/, std::span<const T> y, const Vector& th, std::span<T> out) const {
    const double a = th(0), b = th(1), c = th(2);
    out[0] = c * (y[0] - (y[0] * y[0] * y[0]) / 3.0 + y[1]);
    out[1] = -(y[0] - a - b * y[1]) / c;
  }
};

/// SEIR compartments (S, E, I, R); theta = (beta_E, gamma, lambda) with the
/// infected-contact rate beta_I held fixed.
class SeirField : public TaylorField<SeirField> {
 public:
  explicit SeirField(double beta_i = 0.0) : beta_i_(beta_i) {}

  int dim() const override { return 4; }
  int param_dim() const override { return 3; }
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;
  double beta_i() const { return beta_i_; }

  template <typename T>
  void rhs(const T& /*t*/, std::span<const T> y, const Vector& th, std::span<T> out) const {
    const double beta_e = th(0), gamma = th(1), lambda = th(2);
    const T infection = beta_e * (y[0] * y[1]) + beta_i_ * (y[0] * y[2]);
    out[0] = -infection;
    out[1] = infection - gamma * y[1];
    out[2] = gamma * y[1] - lambda * y[2];
    out[3] = lambda * y[2];
  }

 private:
  double beta_i_;
};

/// Pendulum angle/velocity y1' = y2, y2' = -(g / L) sin(y1); theta = (L).
class PendulumField : public TaylorField<PendulumField> {
 public:
  explicit PendulumField(double gravity = 9.81) : gravity_(gravity) {}

  int dim() const override { return 2; }
  int param_dim() const override { return 1; }
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;
  double gravity() const { return gravity_; }

  template <typename T>
  void rhs(const T& /*t*/, std::span<const T> y, const Vector& th, std::span<T> out) const {
    using std::sin;
    out[0] = y[1];
    out[1] = -(gravity_ / th(0)) * sin(y[0]);
  }

 private:
  double gravity_;
};

/// Damped oscillator y1' = y2, y2' = -a y1 - b y2; theta = (a, b). Affine.
class LinearOscillatorField : public TaylorField<LinearOscillatorField> {
 public:
  int dim() const override { return 2; }
  int param_dim() const override { return 2; }
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;
  std::optional<AffineForm> affine(double t, const Vector& theta) const override;

  template <typename T>
  void rhs(const T& /*t*/, std::span<const T> y, const Vector& th, std::span<T> out) const {
    out[0] = 1.0 * y[1];
    out[1] = -th(0) * y[0] - th(1) * y[1];
  }
};

/// y' = L y + b with fixed L and b; no parameters.
class LinearField : public VectorField {
 public:
  LinearField(Matrix l, Vector b);

  int dim() const override { return static_cast<int>(l_.rows()); }
  int param_dim() const override { return 0; }
  Vector eval(double t, const Vector& y, const Vector& theta) const override;
  Matrix jacobian(double t, const Vector& y, const Vector& theta) const override;
  bool supports_jets() const override { return true; }
  std::vector<Jet> eval_jet(const Jet& t, const std::vector<Jet>& y, const Vector& theta) const override;
  std::optional<AffineForm> affine(double t, const Vector& theta) const override;

 private:
  Matrix l_;
  Vector b_;
};

// ---------------------------------------------------------------------------
// Benchmark problems
// ---------------------------------------------------------------------------

/// How the initial state is parameterised.
enum class InitParameterisation {
  Full,                ///< init params are y0 itself
  SeirExposedInfected  ///< init params (E0, I0), y0 = [1 - E0 - I0, E0, I0, 0]
};

enum class OdeParamInit { FoldedNormal, Uniform };

/// A parameter-estimation benchmark: dynamics, ground truth, measurement
/// setup, bounds and the optimisation recipe.
struct BenchmarkProblem {
  std::string name;  ///< registry name
  std::shared_ptr<const VectorField> field;
  bool lv_printed_form = false;  ///< Lotka-Volterra family only

  std::vector<std::string> param_names;
  Vector true_params;
  std::vector<Bounds> param_bounds;

  InitParameterisation init_kind = InitParameterisation::Full;
  std::vector<std::string> init_names;
  Vector true_init;
  std::vector<Bounds> init_bounds;
  bool init_known = false;  ///< initial values are fixed at the truth during fits

  double t0 = 0.0;
  Matrix H;  ///< k x d
  std::vector<double> data_times;
  double noise_low = 0.0;   ///< sigma^2
  double noise_high = 0.0;  ///< sigma^2
  double dt = 0.0;          ///< probabilistic solver step
  Bounds sigma2_bounds;
  Bounds kappa_bounds;

  bool staged = false;  ///< noise/diffusion-only stage before the joint stage
  OdeParamInit param_init = OdeParamInit::FoldedNormal;
  double init_value_sd = 0.1;  ///< folded-normal scale for unobserved initial values
  /// Starting diffusion; 0 selects a decade scan over kappa_bounds at the
  /// initial point (see initial_point).
  double kappa_init = 1.0;

  int dim() const { return field->dim(); }
  Vector y0(const Vector& init_params) const;
  /// Bounds check of truth and shapes; throws InvalidArgument.
  void validate() const;
};

BenchmarkProblem lotka_volterra(bool printed_form = false);
BenchmarkProblem fitzhugh_nagumo();
BenchmarkProblem seir();
BenchmarkProblem pendulum();
BenchmarkProblem linear_test();
/// Lotka-Volterra variant with correct (true) or wrong equations.
BenchmarkProblem lv_candidate(bool prey_correct, bool predator_correct, bool printed_form = false);

/// M11, M10, M01, M00 in that order.
std::vector<BenchmarkProblem> model_selection_candidates(bool printed_form = false);

/// Names accepted by make_problem.
const std::vector<std::string>& model_names();
BenchmarkProblem make_problem(const std::string& name, bool lv_printed_form = false);

}  // namespace fenrir
