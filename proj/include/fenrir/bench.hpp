#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fenrir/estimate.hpp"

namespace fenrir {

/// u(t_i) = H y(t_i) + v_i with v_i ~ N(0, sigma2 I) and y from the tight
/// tolerance Runge-Kutta truth at the problem's data times.
ObservationSet generate_data(const BenchmarkProblem& problem, double sigma2, std::uint64_t seed);

enum class ExperimentKind {
  Fit,            ///< replicate fits of one model
  ModelSelect,    ///< Lotka-Volterra candidates on shared data
  PendulumSweep   ///< one fit per starting length
};
const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Fit;
  std::string model = "lotka-volterra";
  bool lv_printed_form = false;
  std::string noise = "low";  ///< "low", "high" or a numeric sigma^2
  int replicates = 20;
  std::uint64_t seed_base = 1;
  std::vector<Method> methods{Method::Fenrir};
  Linearization mode = Linearization::EK1;
  int nu = 5;
  double dt = 0.0;  ///< 0 selects the problem's step
  /// Truth overrides by parameter name (ODE parameters and initial values).
  std::map<std::string, double> truth;
  /// Starting values by parameter name, replacing the random draw.
  std::map<std::string, double> start;
  /// Starting lengths of the pendulum sweep.
  std::vector<double> sweep_starts;
  bool plots = false;
  std::string out_dir = "out";
  int threads = 0;  ///< 0 selects the hardware concurrency

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
  /// Noise variance after resolving "low"/"high" against the model.
  double sigma2() const;
  /// Problem with truth overrides applied.
  BenchmarkProblem problem() const;
};

/// Default pendulum sweep {0.5, 1, ..., 10}.
std::vector<double> default_sweep_starts();

/// One fit: one (replicate, candidate, method) triple.
struct RunRecord {
  std::string model;      ///< data-generating model
  std::string candidate;  ///< fitted model
  Method method = Method::Fenrir;
  int replicate = 0;
  std::uint64_t seed = 0;
  double start = std::numeric_limits<double>::quiet_NaN();  ///< sweep start, else NaN
  std::string status;  ///< FitStatus name, or "error"
  std::string error;
  double nll = 0.0;
  double trmse = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  std::vector<std::string> param_names;
  std::vector<double> params;
  /// |estimate - truth| per ODE parameter and initial value; NaN when the
  /// candidate has no true counterpart.
  std::vector<double> abs_errors;
  double wall_time = 0.0;
};

/// A rendered figure and its file name.
struct Plot {
  std::string file;
  std::string svg;
};

/// Rows of an experiment plus the model-selection verdicts.
struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<RunRecord> records;  ///< sorted (replicate, start, candidate, method)
  /// Model selection: winning candidate per replicate (lowest NLL, ties to
  /// the earlier candidate).
  std::vector<std::string> winners;
  std::vector<Plot> plots;  ///< only when config.plots
  double wall_time = 0.0;
};

/// Canonical JSON of the settings that determine results (output directory
/// and thread count excluded) and its 64-bit FNV-1a hash in hex.
std::string config_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& defaults = {});

/// Runs every fit of the experiment on a worker pool. A failed fit becomes
/// an "error" row with the penalty NLL; the batch always completes.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Winning candidate per replicate of a model-selection result.
std::vector<std::string> select_models(const std::vector<RunRecord>& records,
                                       const std::vector<std::string>& candidate_order);

/// NLL profile along one parameter with all others held at `x` (natural
/// scale), e.g. the pendulum length at tuned kappa and sigma^2.
std::vector<double> nll_profile(const Objective& objective, const Vector& x, int index,
                                const std::vector<double>& values);

/// Serialise a problem as "named built-in plus overrides" and back.
std::string problem_json(const BenchmarkProblem& problem);
BenchmarkProblem problem_from_json(const std::string& text);

}  // namespace fenrir
