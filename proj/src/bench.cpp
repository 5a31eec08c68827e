#include "fenrir/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include <json.hpp>

#include "fenrir/outputs.hpp"
#include "fenrir/random.hpp"

namespace fenrir {
namespace {

using Json = nlohmann::ordered_json;

// Stream ids for derive_seed.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kInitStream = 1;

Json bounds_json(const Bounds& b) {
  Json j = Json::array();
  j.push_back(std::isfinite(b.lower) ? Json(b.lower) : Json(nullptr));
  j.push_back(std::isfinite(b.upper) ? Json(b.upper) : Json(nullptr));
  return j;
}

Bounds bounds_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("bounds must be [lower, upper] (null for infinite)");
  Bounds b;
  b.lower = j[0].is_null() ? -std::numeric_limits<double>::infinity() : j[0].get<double>();
  b.upper = j[1].is_null() ? std::numeric_limits<double>::infinity() : j[1].get<double>();
  return b;
}

Json vector_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void set_named(BenchmarkProblem& p, const std::string& name, double value) {
  for (size_t i = 0; i < p.param_names.size(); ++i) {
    if (p.param_names[i] == name) {
      p.true_params(static_cast<Eigen::Index>(i)) = value;
      return;
    }
  }
  for (size_t i = 0; i < p.init_names.size(); ++i) {
    if (p.init_names[i] == name) {
      p.true_init(static_cast<Eigen::Index>(i)) = value;
      return;
    }
  }
  throw InvalidArgument("model '" + p.name + "' has no parameter '" + name + "'");
}

double truth_of(const BenchmarkProblem& p, const std::string& name) {
  for (size_t i = 0; i < p.param_names.size(); ++i)
    if (p.param_names[i] == name) return p.true_params(static_cast<Eigen::Index>(i));
  for (size_t i = 0; i < p.init_names.size(); ++i)
    if (p.init_names[i] == name) return p.true_init(static_cast<Eigen::Index>(i));
  return std::numeric_limits<double>::quiet_NaN();
}

struct Task {
  int replicate = 0;
  std::uint64_t seed = 0;
  double start = std::numeric_limits<double>::quiet_NaN();
  int candidate = 0;
  Method method = Method::Fenrir;
};

struct Context {
  const ExperimentConfig& config;
  const BenchmarkProblem& truth;
  const std::vector<BenchmarkProblem>& candidates;
  const std::vector<ObservationSet>& data;  ///< per replicate
  double sigma2;
};

ObjectiveOptions objective_options(const ExperimentConfig& c, Method method) {
  ObjectiveOptions o;
  o.method = method;
  o.nu = c.nu;
  o.mode = c.mode;
  o.dt = c.dt;
  return o;
}

Vector start_point(const Objective& obj, const ExperimentConfig& c, const Task& task) {
  const ParamSpace& space = obj.space();
  Vector x = init_params(obj.problem(), space, obj.observations(), derive_seed(task.seed, kInitStream));
  for (const auto& [name, value] : c.start) {
    const int i = space.index_of(name);
    if (i < 0) throw InvalidArgument("start value for unknown parameter '" + name + "'");
    x(i) = value;
  }
  if (std::isfinite(task.start)) x(space.index_of("L")) = task.start;
  return tune_diffusion(obj, space.clamp_inside(x));
}

// tRMSE of a wrong-equation candidate: its trajectory against the
// data-generating truth.
double candidate_trmse(const BenchmarkProblem& truth, const BenchmarkProblem& cand, const SplitParams& sp) {
  try {
    RkOptions o = truth_rk_options();
    o.stop_times = truth.data_times;
    const double t_end = truth.data_times.back();
    const RkSolution a = rk_solve(*truth.field, truth.true_params, truth.y0(truth.true_init), truth.t0, t_end, o);
    const RkSolution b = rk_solve(*cand.field, sp.ode, cand.y0(sp.init), cand.t0, t_end, o);
    double acc = 0.0;
    for (double t : truth.data_times) acc += (b.at(t) - a.at(t)).squaredNorm();
    const double v = std::sqrt(acc / static_cast<double>(truth.data_times.size()));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

RunRecord run_task(const Context& ctx, const Task& task) {
  const BenchmarkProblem& cand = ctx.candidates[static_cast<size_t>(task.candidate)];
  RunRecord rec;
  rec.model = ctx.truth.name;
  rec.candidate = cand.name;
  rec.method = task.method;
  rec.replicate = task.replicate;
  rec.seed = task.seed;
  rec.start = task.start;
  const auto t_begin = std::chrono::steady_clock::now();
  try {
    Objective obj(cand, ctx.data[static_cast<size_t>(task.replicate)], objective_options(ctx.config, task.method));
    const Vector x0 = start_point(obj, ctx.config, task);
    FitResult fr = fit(obj, x0, default_schedule(cand, task.method));
    rec.status = to_string(fr.status);
    rec.nll = fr.nll;
    rec.evaluations = fr.evaluations;
    rec.iterations = fr.trace.empty() ? 0 : static_cast<int>(fr.trace.size()) - 1;
    const ParamSpace& space = obj.space();
    for (int i = 0; i < space.size(); ++i) {
      const ParamSpec& s = space[i];
      const double v = fr.params(i);
      rec.param_names.push_back(s.name);
      rec.params.push_back(v);
      double err = std::numeric_limits<double>::quiet_NaN();
      if (s.role == ParamRole::Ode || s.role == ParamRole::Init) {
        err = std::abs(v - truth_of(ctx.truth, s.name));
      } else if (s.role == ParamRole::Noise) {
        err = std::abs(v - ctx.sigma2);
      }
      rec.abs_errors.push_back(err);
    }
    const SplitParams sp = obj.split(fr.params);
    rec.trmse = cand.name == ctx.truth.name ? trmse(cand, sp.ode, sp.init) : candidate_trmse(ctx.truth, cand, sp);
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
    rec.nll = ObjectiveOptions{}.penalty;
    rec.trmse = std::numeric_limits<double>::infinity();
    rec.param_names.clear();
    rec.params.clear();
    rec.abs_errors.clear();
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return rec;
}

void run_pool(size_t count, int threads, const std::function<void(size_t)>& work) {
  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<size_t>(n, count));
  if (n <= 1) {
    for (size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < count; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<double> profile_values(double estimate, const Bounds& b) {
  std::vector<double> v;
  constexpr int kPoints = 60;
  if (estimate > 0.0) {
    const double lo = std::max(estimate / 10.0, b.lower > 0.0 ? b.lower : estimate / 10.0);
    const double hi = std::min(estimate * 10.0, b.upper);
    for (int i = 0; i < kPoints; ++i) v.push_back(lo * std::pow(hi / lo, i / double(kPoints - 1)));
  } else {
    const double lo = std::max(estimate - 1.0, b.lower);
    const double hi = std::min(estimate + 1.0, b.upper);
    for (int i = 0; i < kPoints; ++i) v.push_back(lo + (hi - lo) * i / double(kPoints - 1));
  }
  return v;
}

std::string plot_tag(const RunRecord& r) {
  std::string s = r.candidate + "_" + to_string(r.method);
  if (std::isfinite(r.start)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_L0_%g", r.start);
    s += buf;
  }
  return s;
}

// Posterior band against the data, and one NLL profile per ODE parameter,
// for the first replicate of every Fenrir candidate.
void add_plots(const Context& ctx, ExperimentResult& result) {
  for (const RunRecord& r : result.records) {
    if (r.replicate != 0 || r.method != Method::Fenrir || r.params.empty()) continue;
    if (std::isfinite(r.start) && r.start != result.records.front().start) continue;
    const BenchmarkProblem* cand = nullptr;
    for (const auto& c : ctx.candidates)
      if (c.name == r.candidate) cand = &c;
    if (!cand) continue;
    try {
      const ObservationSet& obs = ctx.data[0];
      Objective obj(*cand, obs, objective_options(ctx.config, Method::Fenrir));
      const Vector x = Eigen::Map<const Vector>(r.params.data(), static_cast<Eigen::Index>(r.params.size()));
      const RegressionResult post = obj.posterior(x);
      const auto ch = obj.chain(x);
      const int d = cand->dim();
      for (int k = 0; k < obs.obs_dim(); ++k) {
        Series mean{"posterior mean", {}, {}, false};
        Series pts{"data", {}, {}, true};
        Band band;
        const Vector hk = obs.H.row(k).transpose();
        for (int n = 0; n < ch->size(); ++n) {
          const GaussianBelief& b = post.posterior[static_cast<size_t>(n)];
          const double m = hk.dot(b.mean.head(d));
          const Matrix cov = b.covariance();
          const double sd = std::sqrt(std::max(0.0, hk.dot(cov.topLeftCorner(d, d) * hk)));
          mean.x.push_back(ch->grid[static_cast<size_t>(n)]);
          mean.y.push_back(m);
          band.x.push_back(ch->grid[static_cast<size_t>(n)]);
          band.lower.push_back(m - 2.0 * sd);
          band.upper.push_back(m + 2.0 * sd);
        }
        for (int j = 0; j < obs.size(); ++j) {
          pts.x.push_back(obs.times[static_cast<size_t>(j)]);
          pts.y.push_back(obs.values[static_cast<size_t>(j)](k));
        }
        result.plots.push_back({"posterior_" + plot_tag(r) + "_obs" + std::to_string(k) + ".svg",
                                svg_chart(cand->name + ": posterior mean +/- 2 sd, observation " + std::to_string(k),
                                          "t", "H y", {mean, pts}, {band})});
      }
      const ParamSpace& space = obj.space();
      for (int i : space.indices(ParamRole::Ode)) {
        const std::vector<double> values = profile_values(x(i), space[i].bounds);
        const std::vector<double> nll = nll_profile(obj, x, i, values);
        Series s{"NLL", values, nll, false};
        result.plots.push_back({"profile_" + plot_tag(r) + "_" + space[i].name + ".svg",
                                svg_chart(cand->name + ": NLL profile in " + space[i].name, space[i].name, "NLL", {s}, {},
                                          truth_of(ctx.truth, space[i].name))});
      }
    } catch (const std::exception&) {
      // A plot that cannot be drawn is skipped; the fits are unaffected.
    }
  }
}

}  // namespace

ObservationSet generate_data(const BenchmarkProblem& problem, double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("generate_data: sigma2 must be >= 0");
  ObservationSet obs;
  obs.H = problem.H;
  obs.times = problem.data_times;
  if (obs.times.empty()) return obs;
  const Vector y0 = problem.y0(problem.true_init);
  const double t_end = *std::max_element(obs.times.begin(), obs.times.end());
  std::function<Vector(double)> truth;
  RkSolution sol;
  if (t_end > problem.t0) {
    RkOptions o = truth_rk_options();
    o.stop_times = obs.times;
    sol = rk_solve(*problem.field, problem.true_params, y0, problem.t0, t_end, o);
  }
  Rng rng(seed);
  const double sd = std::sqrt(sigma2);
  for (double t : obs.times) {
    Vector u = problem.H * (t > problem.t0 ? sol.at(t) : y0);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += sd * rng.normal();
    obs.values.push_back(std::move(u));
  }
  return obs;
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Fit: return "fit";
    case ExperimentKind::ModelSelect: return "model-select";
    case ExperimentKind::PendulumSweep: return "pendulum-sweep";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "fit") return ExperimentKind::Fit;
  if (name == "model-select") return ExperimentKind::ModelSelect;
  if (name == "pendulum-sweep") return ExperimentKind::PendulumSweep;
  throw InvalidArgument("unknown experiment kind '" + name + "'");
}

std::vector<double> default_sweep_starts() {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(0.5 * i);
  return v;
}

double ExperimentConfig::sigma2() const {
  const BenchmarkProblem p = make_problem(model, lv_printed_form);
  if (noise == "low") return p.noise_low;
  if (noise == "high") return p.noise_high;
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(noise, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != noise.size() || !(v >= 0.0) || !std::isfinite(v))
    throw InvalidArgument("noise must be low, high or a non-negative number, got '" + noise + "'");
  return v;
}

BenchmarkProblem ExperimentConfig::problem() const {
  BenchmarkProblem p = make_problem(model, lv_printed_form);
  for (const auto& [name, value] : truth) set_named(p, name, value);
  p.validate();
  return p;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw InvalidArgument("replicates must be >= 1");
  if (nu < 1) throw InvalidArgument("nu must be >= 1");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be >= 0 (0 selects the model default)");
  if (methods.empty()) throw InvalidArgument("at least one method is required");
  if (threads < 0) throw InvalidArgument("threads must be >= 0");
  (void)sigma2();
  const BenchmarkProblem p = problem();
  if (kind == ExperimentKind::ModelSelect) {
    if (p.name != "lotka-volterra") throw InvalidArgument("model selection generates data from lotka-volterra");
    if (methods.size() != 1 || methods[0] != Method::Fenrir)
      throw InvalidArgument("model selection compares marginal likelihoods and needs method fenrir");
  }
  if (kind == ExperimentKind::PendulumSweep) {
    if (p.name != "pendulum") throw InvalidArgument("the start sweep is defined for the pendulum model");
    if (sweep_starts.empty()) throw InvalidArgument("sweep_starts is empty");
    for (double s : sweep_starts)
      if (!(s > 0.0)) throw InvalidArgument("sweep starts must be positive");
  }
}

std::string config_json(const ExperimentConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["model"] = c.model;
  j["lv_printed_form"] = c.lv_printed_form;
  j["noise"] = c.noise;
  j["sigma2"] = c.sigma2();
  j["replicates"] = c.replicates;
  j["seed_base"] = c.seed_base;
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["mode"] = to_string(c.mode);
  j["nu"] = c.nu;
  j["dt"] = c.dt;
  j["truth"] = Json::object();
  for (const auto& [k, v] : c.truth) j["truth"][k] = v;
  j["start"] = Json::object();
  for (const auto& [k, v] : c.start) j["start"][k] = v;
  j["sweep_starts"] = c.sweep_starts;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_json(c))));
  return buf;
}

ExperimentConfig config_from_json(const std::string& text, const ExperimentConfig& defaults) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  ExperimentConfig c = defaults;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const Json& v = it.value();
      if (k == "kind") c.kind = parse_experiment_kind(v.get<std::string>());
      else if (k == "model") c.model = v.get<std::string>();
      else if (k == "lv_printed_form") c.lv_printed_form = v.get<bool>();
      else if (k == "noise") c.noise = v.is_number() ? format_double(v.get<double>()) : v.get<std::string>();
      else if (k == "sigma2") continue;  // derived; written for reference only
      else if (k == "replicates") c.replicates = v.get<int>();
      else if (k == "seed_base") c.seed_base = v.get<std::uint64_t>();
      else if (k == "methods") {
        c.methods.clear();
        for (const auto& m : v) c.methods.push_back(parse_method(m.get<std::string>()));
      } else if (k == "mode") c.mode = parse_linearization(v.get<std::string>());
      else if (k == "nu") c.nu = v.get<int>();
      else if (k == "dt") c.dt = v.get<double>();
      else if (k == "truth") c.truth = v.get<std::map<std::string, double>>();
      else if (k == "start") c.start = v.get<std::map<std::string, double>>();
      else if (k == "sweep_starts") c.sweep_starts = v.get<std::vector<double>>();
      else if (k == "plots") c.plots = v.get<bool>();
      else if (k == "out_dir") c.out_dir = v.get<std::string>();
      else if (k == "threads") c.threads = v.get<int>();
      else throw InvalidArgument("config: unknown key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return c;
}

std::vector<std::string> select_models(const std::vector<RunRecord>& records,
                                       const std::vector<std::string>& order) {
  int max_rep = -1;
  for (const auto& r : records) max_rep = std::max(max_rep, r.replicate);
  std::vector<std::string> winners;
  for (int rep = 0; rep <= max_rep; ++rep) {
    std::string best;
    double best_nll = std::numeric_limits<double>::infinity();
    for (const std::string& name : order) {
      for (const auto& r : records) {
        if (r.replicate != rep || r.candidate != name || r.method != Method::Fenrir) continue;
        if (best.empty() || r.nll < best_nll) {
          best = name;
          best_nll = r.nll;
        }
      }
    }
    winners.push_back(best);
  }
  return winners;
}

std::vector<double> nll_profile(const Objective& objective, const Vector& x, int index,
                                const std::vector<double>& values) {
  if (index < 0 || index >= x.size()) throw InvalidArgument("nll_profile: index out of range");
  std::vector<double> out;
  out.reserve(values.size());
  Vector y = x;
  for (double v : values) {
    y(index) = v;
    out.push_back(objective.natural(y));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t_begin = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = config;
  result.config_hash = config_hash(config);

  const BenchmarkProblem truth = config.problem();
  std::vector<BenchmarkProblem> candidates;
  if (config.kind == ExperimentKind::ModelSelect) {
    candidates = model_selection_candidates(config.lv_printed_form);
    candidates[0] = truth;
    candidates[0].name = "lv-m11";
  } else {
    candidates = {truth};
  }
  const double sigma2 = config.sigma2();

  std::vector<ObservationSet> data;
  for (int r = 0; r < config.replicates; ++r)
    data.push_back(generate_data(truth, sigma2, derive_seed(config.seed_base + static_cast<std::uint64_t>(r), kDataStream)));

  std::vector<Task> tasks;
  const std::vector<double> starts = config.kind == ExperimentKind::PendulumSweep
                                         ? config.sweep_starts
                                         : std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
  for (int r = 0; r < config.replicates; ++r)
    for (double s : starts)
      for (size_t c = 0; c < candidates.size(); ++c)
        for (Method m : config.methods)
          tasks.push_back({r, config.seed_base + static_cast<std::uint64_t>(r), s, static_cast<int>(c), m});

  BenchmarkProblem truth_named = truth;
  if (config.kind == ExperimentKind::ModelSelect) truth_named.name = "lv-m11";
  const Context ctx{config, truth_named, candidates, data, sigma2};
  result.records.resize(tasks.size());
  run_pool(tasks.size(), config.threads, [&](size_t i) { result.records[i] = run_task(ctx, tasks[i]); });
  // Rows were produced in task order, which is the (replicate, start,
  // candidate, method) order; completion order does not matter.

  if (config.kind == ExperimentKind::ModelSelect) {
    std::vector<std::string> order;
    for (const auto& c : candidates) order.push_back(c.name);
    result.winners = select_models(result.records, order);
  }
  if (config.plots) add_plots(ctx, result);
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return result;
}

std::string problem_json(const BenchmarkProblem& p) {
  Json j;
  j["name"] = p.name;
  j["lv_printed_form"] = p.lv_printed_form;
  j["params"] = Json::object();
  for (size_t i = 0; i < p.param_names.size(); ++i)
    j["params"][p.param_names[i]] = {{"value", p.true_params(static_cast<Eigen::Index>(i))},
                                      {"bounds", bounds_json(p.param_bounds[i])}};
  j["init"] = Json::object();
  for (size_t i = 0; i < p.init_names.size(); ++i)
    j["init"][p.init_names[i]] = {{"value", p.true_init(static_cast<Eigen::Index>(i))},
                                   {"bounds", bounds_json(p.init_bounds[i])}};
  j["init_known"] = p.init_known;
  j["t0"] = p.t0;
  Json h = Json::array();
  for (Eigen::Index r = 0; r < p.H.rows(); ++r) h.push_back(vector_json(p.H.row(r).transpose()));
  j["H"] = h;
  j["data_times"] = p.data_times;
  j["noise_low"] = p.noise_low;
  j["noise_high"] = p.noise_high;
  j["dt"] = p.dt;
  j["sigma2_bounds"] = bounds_json(p.sigma2_bounds);
  j["kappa_bounds"] = bounds_json(p.kappa_bounds);
  j["staged"] = p.staged;
  j["param_init"] = p.param_init == OdeParamInit::Uniform ? "uniform" : "folded-normal";
  j["init_value_sd"] = p.init_value_sd;
  j["kappa_init"] = p.kappa_init;
  return j.dump(2);
}

BenchmarkProblem problem_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw InvalidArgument(std::string("problem: ") + e.what());
  }
  try {
    const std::string name = j.at("name").get<std::string>();
    BenchmarkProblem p = make_problem(name, j.value("lv_printed_form", false));
    p.name = name;
    auto named = [&](const char* key, const std::vector<std::string>& names, Vector& values,
                     std::vector<Bounds>& bounds) {
      if (!j.contains(key)) return;
      for (auto it = j[key].begin(); it != j[key].end(); ++it) {
        const auto pos = std::find(names.begin(), names.end(), it.key());
        if (pos == names.end()) throw InvalidArgument("problem: unknown parameter '" + it.key() + "'");
        const size_t i = static_cast<size_t>(pos - names.begin());
        if (it->contains("value")) values(static_cast<Eigen::Index>(i)) = it->at("value").get<double>();
        if (it->contains("bounds")) bounds[i] = bounds_from(it->at("bounds"));
      }
    };
    named("params", p.param_names, p.true_params, p.param_bounds);
    named("init", p.init_names, p.true_init, p.init_bounds);
    if (j.contains("init_known")) p.init_known = j["init_known"].get<bool>();
    if (j.contains("t0")) p.t0 = j["t0"].get<double>();
    if (j.contains("H")) {
      const Json& h = j["H"];
      Matrix m(static_cast<Eigen::Index>(h.size()), h.empty() ? 0 : static_cast<Eigen::Index>(h[0].size()));
      for (size_t r = 0; r < h.size(); ++r) {
        if (h[r].size() != static_cast<size_t>(m.cols())) throw InvalidArgument("problem: ragged H");
        m.row(static_cast<Eigen::Index>(r)) = vector_from(h[r]).transpose();
      }
      p.H = m;
    }
    if (j.contains("data_times")) p.data_times = j["data_times"].get<std::vector<double>>();
    if (j.contains("noise_low")) p.noise_low = j["noise_low"].get<double>();
    if (j.contains("noise_high")) p.noise_high = j["noise_high"].get<double>();
    if (j.contains("dt")) p.dt = j["dt"].get<double>();
    if (j.contains("sigma2_bounds")) p.sigma2_bounds = bounds_from(j["sigma2_bounds"]);
    if (j.contains("kappa_bounds")) p.kappa_bounds = bounds_from(j["kappa_bounds"]);
    if (j.contains("staged")) p.staged = j["staged"].get<bool>();
    if (j.contains("param_init")) {
      const std::string s = j["param_init"].get<std::string>();
      if (s == "uniform") p.param_init = OdeParamInit::Uniform;
      else if (s == "folded-normal") p.param_init = OdeParamInit::FoldedNormal;
      else throw InvalidArgument("problem: unknown param_init '" + s + "'");
    }
    if (j.contains("init_value_sd")) p.init_value_sd = j["init_value_sd"].get<double>();
    if (j.contains("kappa_init")) p.kappa_init = j["kappa_init"].get<double>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("problem: ") + e.what());
  }
}

}  // namespace fenrir
