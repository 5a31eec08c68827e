#include "fenrir/estimate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fenrir/random.hpp"

namespace fenrir {
namespace {

constexpr size_t kCacheSize = 4;
// Relative distance from the bounds (in transformed coordinates) at which
// every stage after the first starts.
constexpr double kStageMargin = 1e-3;

Transform default_transform(const Bounds& b) {
  if (b.finite()) return Transform::LogitBox;
  if (b.lower >= 0.0) return Transform::Log;
  return Transform::Identity;
}

// Index of the state component observed directly by row r of H, or -1.
int selected_component(const Matrix& h, int r) {
  int found = -1;
  for (int j = 0; j < h.cols(); ++j) {
    if (h(r, j) == 0.0) continue;
    if (h(r, j) != 1.0 || found >= 0) return -1;
    found = j;
  }
  return found;
}

}  // namespace

const char* to_string(Method method) { return method == Method::Fenrir ? "fenrir" : "rk"; }

Method parse_method(const std::string& name) {
  if (name == "fenrir") return Method::Fenrir;
  if (name == "rk") return Method::Rk;
  throw InvalidArgument("unknown method '" + name + "' (expected fenrir or rk)");
}

ParamSpace build_param_space(const BenchmarkProblem& problem, Method method) {
  problem.validate();
  ParamSpace space;
  for (size_t i = 0; i < problem.param_names.size(); ++i) {
    const Bounds& b = problem.param_bounds[i];
    space.add({problem.param_names[i], ParamRole::Ode, b, default_transform(b)});
  }
  if (!problem.init_known) {
    for (size_t i = 0; i < problem.init_names.size(); ++i) {
      const Bounds& b = problem.init_bounds[i];
      space.add({problem.init_names[i], ParamRole::Init, b, default_transform(b)});
    }
  }
  if (method == Method::Fenrir) {
    space.add({"sigma2", ParamRole::Noise, problem.sigma2_bounds, Transform::Log});
    space.add({"kappa", ParamRole::Diffusion, problem.kappa_bounds, Transform::Log});
  }
  return space;
}

Vector init_params(const BenchmarkProblem& problem, const ParamSpace& space, const ObservationSet& obs,
                   std::uint64_t seed) {
  Rng rng(seed);
  // Observation at t0, if any, seeds the directly observed initial values.
  const Vector* first = nullptr;
  for (int j = 0; j < obs.size(); ++j) {
    if (std::abs(obs.times[j] - problem.t0) <= 1e-9 * std::max(1.0, std::abs(problem.t0))) {
      first = &obs.values[j];
      break;
    }
  }
  std::vector<double> observed(problem.dim(), std::nan(""));
  if (first && problem.init_kind == InitParameterisation::Full) {
    for (int r = 0; r < obs.H.rows(); ++r) {
      const int c = selected_component(obs.H, r);
      if (c >= 0) observed[c] = (*first)(r);
    }
  }

  Vector x(space.size());
  int init_index = 0;
  for (int i = 0; i < space.size(); ++i) {
    const ParamSpec& s = space[i];
    switch (s.role) {
      case ParamRole::Ode:
        if (problem.param_init == OdeParamInit::Uniform && s.bounds.finite()) {
          x(i) = rng.uniform(s.bounds.lower, s.bounds.upper);
        } else {
          x(i) = std::abs(rng.normal());
        }
        break;
      case ParamRole::Init: {
        const double u = init_index < static_cast<int>(observed.size()) ? observed[init_index] : std::nan("");
        x(i) = std::isnan(u) ? std::abs(rng.normal(0.0, problem.init_value_sd)) : u;
        ++init_index;
        break;
      }
      case ParamRole::Noise: x(i) = 1.0; break;
      case ParamRole::Diffusion: x(i) = problem.kappa_init > 0.0 ? problem.kappa_init : 1.0; break;
    }
  }
  return space.clamp_inside(x);
}

Objective::Objective(BenchmarkProblem problem, ObservationSet obs, ObjectiveOptions options)
    : problem_(std::move(problem)),
      obs_(std::move(obs)),
      options_(std::move(options)),
      space_(build_param_space(problem_, options_.method)),
      prior_(options_.nu, problem_.dim()) {
  obs_.validate(problem_.dim());
  if (obs_.size() == 0) throw InvalidArgument("Objective: no observations");
  for (double t : obs_.times)
    if (t < problem_.t0) throw InvalidArgument("Objective: observation before the initial time");
  if (options_.method == Method::Fenrir) {
    const double dt = options_.dt > 0.0 ? options_.dt : problem_.dt;
    const double t_end = *std::max_element(obs_.times.begin(), obs_.times.end());
    grid_ = solver_grid(problem_.t0, t_end, dt, obs_.times);
  }
}

SplitParams Objective::split(const Vector& x) const {
  if (x.size() != space_.size()) throw InvalidArgument("Objective: parameter vector has wrong length");
  SplitParams p;
  p.ode.resize(static_cast<Eigen::Index>(problem_.param_names.size()));
  p.init = problem_.true_init;
  int io = 0, ii = 0;
  for (int i = 0; i < space_.size(); ++i) {
    switch (space_[i].role) {
      case ParamRole::Ode: p.ode(io++) = x(i); break;
      case ParamRole::Init: p.init(ii++) = x(i); break;
      case ParamRole::Noise: p.sigma2 = x(i); break;
      case ParamRole::Diffusion: p.kappa = x(i); break;
    }
  }
  return p;
}

std::shared_ptr<const BackwardMarkovChain> Objective::chain(const Vector& x) const {
  if (options_.method != Method::Fenrir) throw InvalidArgument("Objective: no chain for the RK objective");
  const SplitParams p = split(x);
  Vector key(p.ode.size() + p.init.size());
  key << p.ode, p.init;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->key.size() == key.size() && it->key == key) {
        cache_.splice(cache_.begin(), cache_, it);
        return cache_.front().chain;
      }
    }
    ++misses_;
  }
  std::shared_ptr<const BackwardMarkovChain> result;
  try {
    SolverOptions so;
    so.mode = options_.mode;
    so.t0 = problem_.t0;
    so.diagnostics = false;
    SolveResult r = solve_ivp(*problem_.field, p.ode, problem_.y0(p.init), prior_, grid_, so);
    result = std::make_shared<const BackwardMarkovChain>(std::move(r.chain));
  } catch (const Error&) {
    result = nullptr;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.push_front({std::move(key), result});
  if (cache_.size() > kCacheSize) cache_.pop_back();
  return result;
}

int Objective::cache_misses() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return misses_;
}

double Objective::natural(const Vector& x) const {
  const double penalty = options_.penalty;
  if (!x.allFinite() || !space_.contains(x)) return penalty;
  const SplitParams p = split(x);
  double value = penalty;
  try {
    if (options_.method == Method::Rk) {
      value = rk_lsq_loss(problem_, p.ode, p.init, obs_, options_.rk);
    } else {
      auto ch = chain(x);
      if (!ch) return penalty;
      const Matrix noise = p.sigma2 * Matrix::Identity(obs_.obs_dim(), obs_.obs_dim());
      value = fenrir_nll(*ch, obs_, p.kappa, noise);
    }
  } catch (const Error&) {
    return penalty;
  }
  if (!std::isfinite(value) || value > penalty) return penalty;
  return value;
}

RegressionResult Objective::posterior(const Vector& x) const {
  auto ch = chain(x);
  if (!ch) throw NumericalError("Objective: probabilistic solve failed at the requested parameters");
  const SplitParams p = split(x);
  return fenrir_posterior(*ch, obs_, p.kappa, p.sigma2 * Matrix::Identity(obs_.obs_dim(), obs_.obs_dim()));
}

Vector tune_diffusion(const Objective& objective, Vector x) {
  const ParamSpace& space = objective.space();
  const std::vector<int> kappa = space.indices(ParamRole::Diffusion);
  if (kappa.empty() || objective.problem().kappa_init > 0.0) return x;
  const int k = kappa.front();
  const Bounds& b = space[k].bounds;
  const double lo = std::ceil(std::log10(std::max(b.lower, 1e-300)));
  const double hi = std::floor(std::log10(std::min(b.upper, 1e300)));
  double best = objective.natural(x);
  double best_kappa = x(k);
  for (double e = lo; e <= hi; e += 1.0) {
    x(k) = std::pow(10.0, e);
    const double v = objective.natural(x);
    if (v < best) {
      best = v;
      best_kappa = x(k);
    }
  }
  x(k) = best_kappa;
  return space.clamp_inside(x);
}

Vector initial_point(const Objective& objective, std::uint64_t seed) {
  return tune_diffusion(objective,
                        init_params(objective.problem(), objective.space(), objective.observations(), seed));
}

std::vector<Stage> default_schedule(const BenchmarkProblem& problem, Method method) {
  const std::vector<ParamRole> all{ParamRole::Ode, ParamRole::Init, ParamRole::Noise, ParamRole::Diffusion};
  if (method == Method::Fenrir && problem.staged)
    return {{"noise-diffusion-only", {ParamRole::Noise, ParamRole::Diffusion}}, {"joint", all}};
  return {{"joint", all}};
}

FitResult fit(const Objective& objective, const Vector& init, const std::vector<Stage>& schedule,
              const LbfgsOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const ParamSpace& space = objective.space();
  if (init.size() != space.size()) throw InvalidArgument("fit: initial vector has wrong length");
  if (!space.contains(init)) throw InvalidArgument("fit: initial vector outside the bounds");
  if (schedule.empty()) throw InvalidArgument("fit: empty schedule");

  LbfgsOptions lo = options;
  lo.penalty = objective.options().penalty;
  Vector best_z = space.to_unconstrained(space.clamp_inside(init));
  double best = objective(best_z);
  FitResult out;
  out.status = FitStatus::Converged;

  for (size_t si = 0; si < schedule.size(); ++si) {
    const Stage& stage = schedule[si];
    std::vector<int> active;
    for (int i = 0; i < space.size(); ++i)
      if (std::find(stage.active.begin(), stage.active.end(), space[i].role) != stage.active.end())
        active.push_back(i);
    out.stage_begin.push_back(static_cast<int>(out.trace.size()));
    if (active.empty()) continue;
    Vector z = best_z;
    // A parameter that ended the previous stage in the flat tail of its box
    // transform would start this one with a vanishing gradient.
    if (si > 0) z = space.to_unconstrained(space.clamp_inside(space.to_natural(z), kStageMargin));

    Vector sub(static_cast<Eigen::Index>(active.size()));
    for (size_t k = 0; k < active.size(); ++k) sub(k) = z(active[k]);
    ScalarFunction f = [&](const Vector& s) {
      Vector full = z;
      for (size_t k = 0; k < active.size(); ++k) full(active[k]) = s(k);
      return objective(full);
    };
    LbfgsResult r = lbfgs_minimize(f, sub, lo);
    out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
    out.evaluations += r.evaluations;
    out.status = r.status;
    if (r.f <= best) {
      best = r.f;
      best_z = z;
      for (size_t k = 0; k < active.size(); ++k) best_z(active[k]) = r.x(k);
    }
  }

  out.params = space.to_natural(best_z);
  out.nll = best;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double trmse(const BenchmarkProblem& problem, const Vector& ode_params, const Vector& init_params) {
  if (problem.data_times.empty()) return 0.0;
  try {
    RkOptions o = truth_rk_options();
    o.stop_times = problem.data_times;
    const double t_end = *std::max_element(problem.data_times.begin(), problem.data_times.end());
    const RkSolution truth =
        rk_solve(*problem.field, problem.true_params, problem.y0(problem.true_init), problem.t0, t_end, o);
    const RkSolution fitted = rk_solve(*problem.field, ode_params, problem.y0(init_params), problem.t0, t_end, o);
    double acc = 0.0;
    for (double t : problem.data_times) acc += (fitted.at(t) - truth.at(t)).squaredNorm();
    const double v = std::sqrt(acc / static_cast<double>(problem.data_times.size()));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

double trmse(const Objective& objective, const FitResult& fitted) {
  const SplitParams p = objective.split(fitted.params);
  return trmse(objective.problem(), p.ode, p.init);
}

}  // namespace fenrir
