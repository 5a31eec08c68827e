#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fenrir/lbfgs.hpp"
#include "fenrir/linearize.hpp"
#include "fenrir/models.hpp"
#include "fenrir/pnsolver.hpp"
#include "fenrir/regression.hpp"
#include "fenrir/rk.hpp"
#include "fenrir/transforms.hpp"

namespace fenrir {

enum class Method { Fenrir, Rk };
const char* to_string(Method method);
Method parse_method(const std::string& name);

/// Parameters estimated for `problem` with `method`, in the order
/// ODE parameters, initial values (unless known), sigma^2, kappa.
/// The RK least-squares loss has no noise or diffusion parameter.
ParamSpace build_param_space(const BenchmarkProblem& problem, Method method);

/// Random starting point (natural scale):
///  * ODE parameters |N(0, 1)| (or uniform on their bounds when the problem
///    asks for it),
///  * initial values from the first observation when it is at t0 and the
///    component is observed directly, else |N(0, init_value_sd^2)|,
///  * sigma^2 = 1 and kappa = problem.kappa_init (1 when that asks for a scan),
/// then moved strictly inside the bounds.
Vector init_params(const BenchmarkProblem& problem, const ParamSpace& space, const ObservationSet& obs,
                   std::uint64_t seed);

struct ObjectiveOptions {
  Method method = Method::Fenrir;
  int nu = 5;
  Linearization mode = Linearization::EK1;
  double dt = 0.0;  ///< 0 selects the problem's step
  double penalty = 1e10;
  RkOptions rk;     ///< baseline integrator settings
};

/// Parameters of one evaluation split by role.
struct SplitParams {
  Vector ode;
  Vector init;  ///< natural initial-value parameters (truth when known)
  double sigma2 = 0.0;
  double kappa = 1.0;
};

/// Negative log-likelihood (Fenrir) or least-squares loss (RK) as a function
/// of the unconstrained parameter vector. Failed solves evaluate to the
/// penalty. Probabilistic-solver outputs are cached on the ODE and
/// initial-value parameters so noise/diffusion changes reuse them. Calls
/// may come from several threads.
class Objective {
 public:
  Objective(BenchmarkProblem problem, ObservationSet obs, ObjectiveOptions options = {});

  double operator()(const Vector& z) const { return natural(space_.to_natural(z)); }
  double natural(const Vector& x) const;

  const ParamSpace& space() const { return space_; }
  const BenchmarkProblem& problem() const { return problem_; }
  const ObservationSet& observations() const { return obs_; }
  const ObjectiveOptions& options() const { return options_; }
  const std::vector<double>& grid() const { return grid_; }

  SplitParams split(const Vector& x) const;
  /// Fenrir only: the physics-enhanced prior for the given natural parameters.
  std::shared_ptr<const BackwardMarkovChain> chain(const Vector& x) const;
  /// Fenrir only: posterior trajectory conditioned on the data.
  RegressionResult posterior(const Vector& x) const;
  int cache_misses() const;

 private:
  BenchmarkProblem problem_;
  ObservationSet obs_;
  ObjectiveOptions options_;
  ParamSpace space_;
  std::vector<double> grid_;
  IwpPrior prior_;

  struct Entry {
    Vector key;
    std::shared_ptr<const BackwardMarkovChain> chain;  ///< null when the solve failed
  };
  mutable std::mutex mutex_;
  mutable std::list<Entry> cache_;
  mutable int misses_ = 0;
};

/// For Fenrir on problems with kappa_init = 0: kappa set to the best value of
/// a one-decade scan over its bounds, everything else held at `x`. The NLL is
/// flat in kappa until the prior variance reaches the data scale, so a start
/// at kappa = 1 can leave the optimiser with a zero gradient. Otherwise `x`
/// is returned unchanged.
Vector tune_diffusion(const Objective& objective, Vector x);

/// tune_diffusion(init_params(...)).
Vector initial_point(const Objective& objective, std::uint64_t seed);

/// A stage of the optimisation schedule: the roles optimised while all other
/// parameters stay fixed.
struct Stage {
  std::string name;
  std::vector<ParamRole> active;
};

/// `noise-diffusion-only` then `joint` for staged Fenrir problems, otherwise
/// a single `joint` stage.
std::vector<Stage> default_schedule(const BenchmarkProblem& problem, Method method);

struct FitResult {
  Vector params;                 ///< natural scale, ParamSpace order
  double nll = 0.0;              ///< objective value at params
  std::vector<double> trace;     ///< objective after every iteration, all stages
  std::vector<int> stage_begin;  ///< trace index where each stage starts
  FitStatus status = FitStatus::MaxIter;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  ///< seconds
  int evaluations = 0;
};

FitResult fit(const Objective& objective, const Vector& init, const std::vector<Stage>& schedule,
              const LbfgsOptions& options = {});

/// RMS over the data times of ||y_fit(t) - y_true(t)||_2, both integrated
/// with the tight truth tolerances. +inf on integration failure.
double trmse(const BenchmarkProblem& problem, const Vector& ode_params, const Vector& init_params);
double trmse(const Objective& objective, const FitResult& fitted);

}  // namespace fenrir
