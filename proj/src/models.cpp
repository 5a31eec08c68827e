#include "fenrir/models.hpp"

#include <cmath>
#include <numbers>

namespace fenrir {

Matrix LotkaVolterraField::jacobian(double, const Vector& y, const Vector& th) const {
  check(y, th);
  Matrix j(2, 2);
  if (prey_ == Prey::Correct) {
    j(0, 0) = th(0) - th(1) * y(1);
    j(0, 1) = -th(1) * y(0);
  } else {
    j(0, 0) = 2.0 * th(0) * y(0);
    j(0, 1) = -th(1);
  }
  switch (predator_) {
    case Predator::Standard:
      j(1, 0) = th(3) * y(1);
      j(1, 1) = -th(2) + th(3) * y(0);
      break;
    case Predator::Printed:
      j(1, 0) = -th(2) + th(3) * y(1);
      j(1, 1) = th(3) * y(0);
      break;
    case Predator::Wrong:
      j(1, 0) = 0.0;
      j(1, 1) = -th(2);
      break;
  }
  return j;
}

Matrix FitzHughNagumoField::jacobian(double, const Vector& y, const Vector& th) const {
  check(y, th);
  const double b = th(1), c = th(2);
  Matrix j(2, 2);
  j << c * (1.0 - y(0) * y(0)), c, -1.0 / c, b / c;
  return j;
}

Matrix SeirField::jacobian(double, const Vector& y, const Vector& th) const {
  check(y, th);
  const double be = th(0), g = th(1), l = th(2);
  const double ds = be * y(1) + beta_i_ * y(2);
  const double de = be * y(0);
  const double di = beta_i_ * y(0);
  Matrix j = Matrix::Zero(4, 4);
  j.row(0) << -ds, -de, -di, 0.0;
  j.row(1) << ds, de - g, di, 0.0;
  j.row(2) << 0.0, g, -l, 0.0;
  j.row(3) << 0.0, 0.0, l, 0.0;
  return j;
}

Matrix PendulumField::jacobian(double, const Vector& y, const Vector& th) const {
  check(y, th);
  Matrix j(2, 2);
  j << 0.0, 1.0, -(gravity_ / th(0)) * std::cos(y(0)), 0.0;
  return j;
}

Matrix LinearOscillatorField::jacobian(double, const Vector& y, const Vector& th) const {
  check(y, th);
  Matrix j(2, 2);
  j << 0.0, 1.0, -th(0), -th(1);
  return j;
}

std::optional<AffineForm> LinearOscillatorField::affine(double t, const Vector& th) const {
  return AffineForm{jacobian(t, Vector::Zero(2), th), Vector::Zero(2)};
}

LinearField::LinearField(Matrix l, Vector b) : l_(std::move(l)), b_(std::move(b)) {
  if (l_.rows() != l_.cols() || b_.size() != l_.rows()) throw InvalidArgument("LinearField: shape mismatch");
}

Vector LinearField::eval(double, const Vector& y, const Vector&) const {
  if (y.size() != dim()) throw InvalidArgument("LinearField: state dimension mismatch");
  return l_ * y + b_;
}

Matrix LinearField::jacobian(double, const Vector&, const Vector&) const { return l_; }

std::vector<Jet> LinearField::eval_jet(const Jet& t, const std::vector<Jet>& y, const Vector&) const {
  const int d = dim();
  std::vector<Jet> out(d, Jet(t.order()));
  for (int i = 0; i < d; ++i) {
    out[i] += b_(i);
    for (int j = 0; j < d; ++j) out[i] += l_(i, j) * y[j];
  }
  return out;
}

std::optional<AffineForm> LinearField::affine(double, const Vector&) const { return AffineForm{l_, b_}; }

// ---------------------------------------------------------------------------

Vector BenchmarkProblem::y0(const Vector& init) const {
  switch (init_kind) {
    case InitParameterisation::Full:
      return init;
    case InitParameterisation::SeirExposedInfected: {
      Vector y(4);
      y << 1.0 - init(0) - init(1), init(0), init(1), 0.0;
      return y;
    }
  }
  return init;
}

void BenchmarkProblem::validate() const {
  if (!field) throw InvalidArgument(name + ": missing vector field");
  const auto check = [&](const std::vector<std::string>& names, const Vector& v, const std::vector<Bounds>& b,
                         const char* what) {
    if (names.size() != static_cast<size_t>(v.size()) || b.size() != names.size())
      throw InvalidArgument(name + ": inconsistent " + what + " metadata");
    for (size_t i = 0; i < names.size(); ++i)
      if (!b[i].contains(v(i))) throw InvalidArgument(name + ": true " + names[i] + " outside its bounds");
  };
  check(param_names, true_params, param_bounds, "parameter");
  check(init_names, true_init, init_bounds, "initial-value");
  if (static_cast<int>(param_names.size()) != field->param_dim())
    throw InvalidArgument(name + ": parameter count does not match the field");
  if (H.cols() != field->dim()) throw InvalidArgument(name + ": H does not match the ODE dimension");
  if (y0(true_init).size() != field->dim()) throw InvalidArgument(name + ": initial state has wrong dimension");
  if (!(dt > 0.0)) throw InvalidArgument(name + ": solver step must be positive");
}

namespace {

std::vector<double> range_grid(double start, double step, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = start + step * i;
  return out;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

BenchmarkProblem lv_base(const std::string& name, bool prey_correct, bool predator_correct, bool printed) {
  using LV = LotkaVolterraField;
  const LV::Predator predator =
      predator_correct ? (printed ? LV::Predator::Printed : LV::Predator::Standard) : LV::Predator::Wrong;
  auto field = std::make_shared<LV>(prey_correct ? LV::Prey::Correct : LV::Prey::Wrong, predator);

  BenchmarkProblem p;
  p.name = name;
  p.field = field;
  p.lv_printed_form = printed;
  p.param_names = {"alpha", "beta", "gamma"};
  p.true_params = vec({2.0, 1.0, 4.0});
  if (predator_correct) {
    p.param_names.push_back("delta");
    p.true_params = vec({2.0, 1.0, 4.0, 1.0});
  }
  p.param_bounds.assign(p.param_names.size(), Bounds{0.0, 100.0});
  p.init_names = {"y1_0", "y2_0"};
  p.true_init = vec({5.0, 3.0});
  p.init_bounds.assign(2, Bounds{0.0, 100.0});
  p.H = Matrix::Identity(2, 2);
  p.data_times = range_grid(0.0, 0.1, 21);
  p.noise_low = 0.01;
  p.noise_high = 0.25;
  p.dt = 5e-3;
  p.sigma2_bounds = {1e-6, 1e2};
  p.kappa_bounds = {1e-20, 1e50};
  p.staged = true;
  return p;
}

}  // namespace

BenchmarkProblem lotka_volterra(bool printed_form) { return lv_base("lotka-volterra", true, true, printed_form); }

BenchmarkProblem lv_candidate(bool prey_correct, bool predator_correct, bool printed_form) {
  std::string name = "lv-m";
  name += prey_correct ? '1' : '0';
  name += predator_correct ? '1' : '0';
  if (prey_correct && predator_correct) name = "lotka-volterra";
  return lv_base(name, prey_correct, predator_correct, printed_form);
}

std::vector<BenchmarkProblem> model_selection_candidates(bool printed_form) {
  std::vector<BenchmarkProblem> out = {lv_candidate(true, true, printed_form), lv_candidate(true, false, printed_form),
                                       lv_candidate(false, true, printed_form),
                                       lv_candidate(false, false, printed_form)};
  out[0].name = "lv-m11";
  return out;
}

BenchmarkProblem fitzhugh_nagumo() {
  BenchmarkProblem p;
  p.name = "fitzhugh-nagumo";
  p.field = std::make_shared<FitzHughNagumoField>();
  p.param_names = {"a", "b", "c"};
  p.true_params = vec({0.2, 0.2, 3.0});
  p.param_bounds.assign(3, Bounds{0.0, 100.0});
  p.init_names = {"y1_0", "y2_0"};
  p.true_init = vec({-1.0, 1.0});
  p.init_bounds.assign(2, Bounds{-100.0, 100.0});
  p.H = Matrix::Identity(2, 2);
  p.data_times = range_grid(0.0, 0.5, 21);
  p.noise_low = 0.005;
  p.noise_high = 0.05;
  p.dt = 1e-2;
  p.sigma2_bounds = {1e-6, 1e2};
  p.kappa_bounds = {1e-20, 1e50};
  p.staged = false;
  p.kappa_init = 0.0;
  return p;
}

BenchmarkProblem seir() {
  BenchmarkProblem p;
  p.name = "seir";
  p.field = std::make_shared<SeirField>(0.0);
  p.param_names = {"beta_E", "gamma", "lambda"};
  p.true_params = vec({0.5, 1.0 / 5.0, 1.0 / 21.0});
  p.param_bounds.assign(3, Bounds{0.0, 1.0});
  p.init_kind = InitParameterisation::SeirExposedInfected;
  p.init_names = {"E0", "I0"};
  p.true_init = vec({1e-4, 1e-5});
  p.init_bounds.assign(2, Bounds{0.0, 1.0});
  p.H = Matrix::Zero(2, 4);
  p.H(0, 2) = 1.0;
  p.H(1, 3) = 1.0;
  p.data_times = range_grid(30.0, 1.0, 71);
  p.noise_low = 5e-4;
  p.noise_high = 5e-4;
  p.dt = 0.2;
  p.sigma2_bounds = {1e-6, 1e2};
  p.kappa_bounds = {1e-20, 1e20};
  p.staged = false;
  p.param_init = OdeParamInit::Uniform;
  p.init_value_sd = 0.1;
  return p;
}

BenchmarkProblem pendulum() {
  BenchmarkProblem p;
  p.name = "pendulum";
  p.field = std::make_shared<PendulumField>(9.81);
  p.param_names = {"L"};
  p.true_params = vec({1.0});
  p.param_bounds = {Bounds{0.0, 100.0}};
  p.init_names = {"y1_0", "y2_0"};
  p.true_init = vec({0.0, std::numbers::pi / 2.0});
  p.init_bounds.assign(2, Bounds{-100.0, 100.0});
  p.init_known = true;
  p.H = Matrix(1, 2);
  p.H << 0.0, 1.0;
  p.data_times = range_grid(0.0, 0.01, 1001);
  p.noise_low = 0.1;
  p.noise_high = 0.1;
  p.dt = 0.1;
  p.sigma2_bounds = {1e-8, 1e4};
  p.kappa_bounds = {1e-20, 1e50};
  p.staged = true;
  p.kappa_init = 0.0;
  return p;
}

BenchmarkProblem linear_test() {
  BenchmarkProblem p;
  p.name = "linear-test";
  p.field = std::make_shared<LinearOscillatorField>();
  p.param_names = {"a", "b"};
  p.true_params = vec({4.0, 0.5});
  p.param_bounds.assign(2, Bounds{0.0, 10.0});
  p.init_names = {"y1_0", "y2_0"};
  p.true_init = vec({1.0, 0.0});
  p.init_bounds.assign(2, Bounds{-10.0, 10.0});
  p.H = Matrix::Identity(2, 2);
  p.data_times = range_grid(0.0, 0.25, 21);
  p.noise_low = 0.01;
  p.noise_high = 0.1;
  p.dt = 0.05;
  p.sigma2_bounds = {1e-6, 1e2};
  p.kappa_bounds = {1e-20, 1e20};
  p.staged = false;
  return p;
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"lotka-volterra", "fitzhugh-nagumo", "seir",   "pendulum",
                                                 "lv-m10",         "lv-m01",          "lv-m00", "linear-test"};
  return names;
}

BenchmarkProblem make_problem(const std::string& name, bool lv_printed_form) {
  if (name == "lotka-volterra" || name == "lv-m11") return lotka_volterra(lv_printed_form);
  if (name == "fitzhugh-nagumo") return fitzhugh_nagumo();
  if (name == "seir") return seir();
  if (name == "pendulum") return pendulum();
  if (name == "lv-m10") return lv_candidate(true, false, lv_printed_form);
  if (name == "lv-m01") return lv_candidate(false, true, lv_printed_form);
  if (name == "lv-m00") return lv_candidate(false, false, lv_printed_form);
  if (name == "linear-test") return linear_test();
  throw InvalidArgument("unknown model '" + name + "'");
}

}  // namespace fenrir
