#include "fenrir/rk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fenrir {
namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stepper {
  const VectorField& f;
  const Vector& theta;
  Vector k2, k3, k4, k5, k6, k7, tmp;

  // One step from (t, y) with slope k1; fills y_new, k7 = f(t + h, y_new) and err.
  void step(double t, const Vector& y, const Vector& k1, double h, Vector& y_new, Vector& err) {
    tmp = y + h * a21 * k1;
    k2 = f.eval(t + c2 * h, tmp, theta);
    tmp = y + h * (a31 * k1 + a32 * k2);
    k3 = f.eval(t + c3 * h, tmp, theta);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = f.eval(t + c4 * h, tmp, theta);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = f.eval(t + c5 * h, tmp, theta);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = f.eval(t + h, tmp, theta);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f.eval(t + h, y_new, theta);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }
};

double error_norm(const Vector& err, const Vector& y, const Vector& y_new, const RkOptions& o) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
    const double r = err(i) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

// Starting step heuristic of Hairer, Norsett and Wanner.
double initial_step(const VectorField& f, const Vector& theta, double t0, const Vector& y0, const Vector& f0,
                    double span, const RkOptions& o) {
  const Vector sc = (o.abs_tol + o.rel_tol * y0.cwiseAbs().array()).matrix();
  const double n = static_cast<double>(y0.size());
  const double d0 = std::sqrt(y0.cwiseQuotient(sc).squaredNorm() / n);
  const double d1 = std::sqrt(f0.cwiseQuotient(sc).squaredNorm() / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  const Vector y1 = y0 + h0 * f0;
  const Vector f1 = f.eval(t0 + h0, y1, theta);
  const double d2 = std::sqrt((f1 - f0).cwiseQuotient(sc).squaredNorm() / n) / h0;
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

RkSolution::RkSolution(std::vector<double> times, std::vector<Vector> states, std::vector<Vector> slopes,
                       double abs_tol, double rel_tol, int rejected)
    : times_(std::move(times)),
      states_(std::move(states)),
      slopes_(std::move(slopes)),
      abs_tol_(abs_tol),
      rel_tol_(rel_tol),
      rejected_(rejected) {}

Vector RkSolution::at(double t) const {
  if (times_.empty()) throw InvalidArgument("RkSolution: empty solution");
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  if (t < times_.front() - tol || t > times_.back() + tol)
    throw InvalidArgument("RkSolution: time " + std::to_string(t) + " outside the integrated interval");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return states_.front();
  if (it == times_.end()) return states_.back();
  const size_t i = static_cast<size_t>(it - times_.begin()) - 1;
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  if (s == 0.0) return states_[i];
  // Cubic Hermite basis.
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * states_[i] + h10 * h * slopes_[i] + h01 * states_[i + 1] + h11 * h * slopes_[i + 1];
}

RkSolution rk_solve(const VectorField& field, const Vector& theta, const Vector& y0, double t0, double t1,
                    const RkOptions& o) {
  if (y0.size() != field.dim()) throw InvalidArgument("rk_solve: initial value has wrong dimension");
  if (!(t1 >= t0)) throw InvalidArgument("rk_solve: t1 must not precede t0");
  if (!y0.allFinite()) throw InvalidArgument("rk_solve: non-finite initial value");
  if (o.fixed_step <= 0.0 && !(o.abs_tol > 0.0 && o.rel_tol >= 0.0))
    throw InvalidArgument("rk_solve: tolerances must be positive");

  std::vector<double> stops;
  for (double s : o.stop_times)
    if (s > t0 && s < t1) stops.push_back(s);
  stops.push_back(t1);
  std::sort(stops.begin(), stops.end());

  std::vector<double> times{t0};
  std::vector<Vector> states{y0};
  std::vector<Vector> slopes{field.eval(t0, y0, theta)};
  int rejected = 0;
  if (t1 == t0) return RkSolution(times, states, slopes, o.abs_tol, o.rel_tol, 0);

  Stepper st{field, theta, {}, {}, {}, {}, {}, {}, {}};
  Vector y_new, err;
  double t = t0;
  const double span = t1 - t0;
  double h = o.fixed_step > 0.0 ? o.fixed_step : initial_step(field, theta, t0, y0, slopes[0], span, o);
  size_t next_stop = 0;
  long steps = 0;

  while (t < t1) {
    while (next_stop < stops.size() && stops[next_stop] <= t) ++next_stop;
    const double target = stops[next_stop];
    bool lands = false;
    double h_try = h;
    if (t + h_try >= target - 1e-12 * std::max(1.0, std::abs(target))) {
      h_try = target - t;
      lands = true;
    }
    if (++steps > o.max_steps)
      throw RkFailure("rk_solve: step budget exhausted at t = " + std::to_string(t));
    if (h_try <= 1e-14 * std::max(1.0, std::abs(t)))
      throw RkFailure("rk_solve: step size underflow at t = " + std::to_string(t));

    st.step(t, states.back(), slopes.back(), h_try, y_new, err);
    if (!y_new.allFinite() || !st.k7.allFinite()) {
      if (o.fixed_step > 0.0) throw RkFailure("rk_solve: non-finite state at t = " + std::to_string(t + h_try));
      ++rejected;
      h = 0.2 * h_try;
      continue;
    }

    if (o.fixed_step > 0.0) {
      t = lands ? target : t + h_try;
    } else {
      const double en = error_norm(err, states.back(), y_new, o);
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en > 1.0) {
        ++rejected;
        h = h_try * std::min(1.0, factor);
        continue;
      }
      t = lands ? target : t + h_try;
      // Keep the proposal from the unclipped step so landing on a stop does
      // not shrink subsequent steps.
      h = std::max(h_try, lands ? h : h_try) * factor;
    }
    times.push_back(t);
    states.push_back(y_new);
    slopes.push_back(st.k7);
  }
  return RkSolution(std::move(times), std::move(states), std::move(slopes), o.abs_tol, o.rel_tol, rejected);
}

double rk_lsq_loss(const BenchmarkProblem& problem, const Vector& params, const Vector& init,
                   const ObservationSet& obs, const RkOptions& options) {
  obs.validate(problem.dim());
  if (obs.size() == 0) return 0.0;
  try {
    RkOptions o = options;
    o.stop_times.insert(o.stop_times.end(), obs.times.begin(), obs.times.end());
    const double t_end = *std::max_element(obs.times.begin(), obs.times.end());
    const RkSolution sol = rk_solve(*problem.field, params, problem.y0(init), problem.t0, t_end, o);
    double loss = 0.0;
    for (int j = 0; j < obs.size(); ++j) loss += (obs.H * sol.at(obs.times[j]) - obs.values[j]).squaredNorm();
    return std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace fenrir
