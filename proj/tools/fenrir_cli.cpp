// fenrir: command-line front end for solving, fitting and benchmarking.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure of a single-run
// command.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fenrir/bench.hpp"
#include "fenrir/outputs.hpp"

namespace {

using namespace fenrir;

constexpr int kUsage = 1;
constexpr int kNumerical = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const std::string& a : items) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("expected name=value, got '" + a + "'");
    const std::vector<double> v = parse_list(a.substr(eq + 1));
    if (v.size() != 1) throw InvalidArgument("expected one value in '" + a + "'");
    out[a.substr(0, eq)] = v[0];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Options shared by the experiment commands. Values land in `flags`; only
// options given on the command line override the config file.
struct ExperimentFlags {
  ExperimentConfig cfg;
  std::string config_file;
  std::string method = "fenrir";
  std::string mode = "ek1";
  std::vector<std::string> start, truth;
  std::vector<CLI::Option*> given;
  CLI::Option *o_model = nullptr, *o_noise = nullptr, *o_seed = nullptr, *o_method = nullptr, *o_reps = nullptr,
              *o_out = nullptr, *o_mode = nullptr, *o_nu = nullptr, *o_dt = nullptr, *o_plots = nullptr,
              *o_threads = nullptr, *o_start = nullptr, *o_truth = nullptr, *o_printed = nullptr;

  void attach(CLI::App* app, bool with_model, bool with_method) {
    app->add_option("--config", config_file, "JSON config file (flags given here take precedence)");
    if (with_model) o_model = app->add_option("--model", cfg.model, "model registry name");
    o_noise = app->add_option("--noise", cfg.noise, "low, high or a sigma^2 value");
    o_seed = app->add_option("--seed", cfg.seed_base, "seed base; replicate r uses seed + r");
    if (with_method) o_method = app->add_option("--method", method, "fenrir, rk or both");
    o_reps = app->add_option("--replicates", cfg.replicates, "replicate count");
    o_out = app->add_option("--out", cfg.out_dir, "output directory");
    o_mode = app->add_option("--mode", mode, "ek0 or ek1");
    o_nu = app->add_option("--nu", cfg.nu, "integrated Wiener process order");
    o_dt = app->add_option("--dt", cfg.dt, "solver step (0 = model default)");
    o_plots = app->add_flag("--plots", cfg.plots, "write SVG plots");
    o_threads = app->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
    o_start = app->add_option("--start", start, "fixed starting value, name=value (repeatable)");
    o_truth = app->add_option("--truth", truth, "ground-truth override, name=value (repeatable)");
    o_printed = app->add_flag("--lv-printed-form", cfg.lv_printed_form,
                              "Lotka-Volterra predator equation -gamma*y1 + delta*y1*y2");
  }

  static bool set(const CLI::Option* o) { return o && o->count() > 0; }

  ExperimentConfig resolve(ExperimentConfig base) const {
    if (!config_file.empty()) base = config_from_json(read_file(config_file), base);
    if (set(o_model)) base.model = cfg.model;
    if (set(o_noise)) base.noise = cfg.noise;
    if (set(o_seed)) base.seed_base = cfg.seed_base;
    if (set(o_method)) {
      if (method == "both") base.methods = {Method::Fenrir, Method::Rk};
      else base.methods = {parse_method(method)};
    }
    if (set(o_reps)) base.replicates = cfg.replicates;
    if (set(o_out)) base.out_dir = cfg.out_dir;
    if (set(o_mode)) base.mode = parse_linearization(mode);
    if (set(o_nu)) base.nu = cfg.nu;
    if (set(o_dt)) base.dt = cfg.dt;
    if (set(o_plots)) base.plots = cfg.plots;
    if (set(o_threads)) base.threads = cfg.threads;
    if (set(o_start)) base.start = parse_assignments(start);
    if (set(o_truth)) base.truth = parse_assignments(truth);
    if (set(o_printed)) base.lv_printed_form = cfg.lv_printed_form;
    return base;
  }
};

void print_summary(const ExperimentResult& r) {
  std::vector<std::pair<std::string, Method>> groups;
  for (const auto& rec : r.records) {
    const auto key = std::make_pair(rec.candidate, rec.method);
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::printf("%s %s  config_hash=%s  %zu fits in %.1f s\n", to_string(r.config.kind), r.config.model.c_str(),
              r.config_hash.c_str(), r.records.size(), r.wall_time);
  for (const auto& [cand, method] : groups) {
    std::vector<double> t;
    int errors = 0, n = 0;
    for (const auto& rec : r.records) {
      if (rec.candidate != cand || rec.method != method) continue;
      ++n;
      if (rec.status == "error") ++errors;
      if (std::isfinite(rec.trmse)) t.push_back(rec.trmse);
    }
    std::printf("  %-16s %-6s fits=%d errors=%d median_trmse=%s\n", cand.c_str(), to_string(method), n, errors,
                format_double(quantile(t, 0.5)).c_str());
  }
  if (!r.winners.empty()) {
    std::map<std::string, int> wins;
    for (const auto& w : r.winners) ++wins[w];
    for (const auto& [name, count] : wins) std::printf("  wins %-10s %d/%zu\n", name.c_str(), count, r.winners.size());
  }
}

int run_and_emit(const ExperimentConfig& cfg, bool single_run) {
  const ExperimentResult r = run_experiment(cfg);
  emit_outputs(r, cfg.out_dir);
  print_summary(r);
  if (single_run && r.records.size() == 1 && r.records[0].status == "error") {
    std::fprintf(stderr, "fit failed: %s\n", r.records[0].error.c_str());
    return kNumerical;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string model = "lotka-volterra";
  std::string params, init;
  double dt = 0.0, t_end = 0.0;
  int nu = 5;
  std::string mode = "ek1";
  std::string out = "out";
  bool printed = false;
};

int cmd_solve(const SolveArgs& a) {
  BenchmarkProblem p = make_problem(a.model, a.printed);
  Vector theta = p.true_params;
  Vector init = p.true_init;
  if (!a.params.empty()) {
    const auto v = parse_list(a.params);
    if (static_cast<Eigen::Index>(v.size()) != theta.size())
      throw InvalidArgument("--params needs " + std::to_string(theta.size()) + " values");
    theta = Eigen::Map<const Vector>(v.data(), theta.size());
  }
  if (!a.init.empty()) {
    const auto v = parse_list(a.init);
    if (static_cast<Eigen::Index>(v.size()) != init.size())
      throw InvalidArgument("--init needs " + std::to_string(init.size()) + " values");
    init = Eigen::Map<const Vector>(v.data(), init.size());
  }
  const double dt = a.dt > 0.0 ? a.dt : p.dt;
  const double t_end = a.t_end > 0.0 ? a.t_end : p.data_times.back();
  if (!(t_end > p.t0)) throw InvalidArgument("--t-end must exceed the initial time");
  const IwpPrior prior(a.nu, p.dim());
  SolverOptions so;
  so.mode = parse_linearization(a.mode);
  so.t0 = p.t0;
  const std::vector<double> grid = solver_grid(p.t0, t_end, dt, {});
  SolveResult res;
  try {
    res = solve_ivp(*p.field, theta, p.y0(init), prior, grid, so);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "solve failed: %s\n", e.what());
    return kNumerical;
  }
  const auto marg = smooth(res.chain);
  std::filesystem::create_directories(a.out);
  const std::string path = (std::filesystem::path(a.out) / "solution.csv").string();
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  const int d = p.dim();
  f << "t";
  for (int j = 0; j < d; ++j) f << ",mean_y" << j + 1;
  for (int j = 0; j < d; ++j) f << ",sd_y" << j + 1;
  f << "\n";
  for (size_t n = 0; n < marg.size(); ++n) {
    f << format_double(res.chain.grid[n]);
    const Matrix cov = marg[n].covariance();
    for (int j = 0; j < d; ++j) f << ',' << format_double(marg[n].mean(j));
    for (int j = 0; j < d; ++j) f << ',' << format_double(std::sqrt(std::max(0.0, cov(j, j))));
    f << "\n";
  }
  std::printf("solved %s on %zu nodes (nu=%d, %s); wrote %s\n", p.name.c_str(), marg.size(), a.nu, a.mode.c_str(),
              path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fenrir: ODE parameter estimation with probabilistic numerical likelihoods"};
  app.set_version_flag("--version", std::string("fenrir ") + FENRIR_VERSION);
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "probabilistic solve at fixed parameters; writes solution.csv");
  solve->add_option("--model", sa.model, "model registry name");
  solve->add_option("--params", sa.params, "comma-separated ODE parameters (default: truth)");
  solve->add_option("--init", sa.init, "comma-separated initial-value parameters (default: truth)");
  solve->add_option("--dt", sa.dt, "solver step (0 = model default)");
  solve->add_option("--t-end", sa.t_end, "final time (0 = last data time)");
  solve->add_option("--nu", sa.nu, "integrated Wiener process order");
  solve->add_option("--mode", sa.mode, "ek0 or ek1");
  solve->add_option("--out", sa.out, "output directory");
  solve->add_flag("--lv-printed-form", sa.printed, "Lotka-Volterra predator equation as printed");

  ExperimentFlags fit_flags;
  auto* fitc = app.add_subcommand("fit", "replicate fits of one model; writes fits.csv and summary.csv");
  fit_flags.attach(fitc, true, true);

  ExperimentFlags ms_flags;
  auto* msc = app.add_subcommand("model-select", "fit the four Lotka-Volterra candidates on shared data");
  ms_flags.attach(msc, false, false);

  std::string suite = "all";
  ExperimentFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "run an experiment suite into <out>/<experiment>/");
  bench->add_option("--suite", suite, "lv, fhn, seir, pendulum or all")
      ->check(CLI::IsMember({"lv", "fhn", "seir", "pendulum", "all"}));
  bench_flags.attach(bench, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa);

    if (fitc->parsed()) {
      ExperimentConfig cfg = fit_flags.resolve({});
      cfg.kind = ExperimentKind::Fit;
      return run_and_emit(cfg, true);
    }

    if (msc->parsed()) {
      ExperimentConfig base;
      base.kind = ExperimentKind::ModelSelect;
      ExperimentConfig cfg = ms_flags.resolve(base);
      cfg.kind = ExperimentKind::ModelSelect;
      cfg.model = "lotka-volterra";
      cfg.methods = {Method::Fenrir};
      return run_and_emit(cfg, false);
    }

    if (bench->parsed()) {
      ExperimentConfig base = bench_flags.resolve({});
      const std::filesystem::path root(base.out_dir);
      std::vector<std::pair<std::string, ExperimentConfig>> runs;
      auto fit_pair = [&](const std::string& tag, const std::string& model) {
        for (const char* noise : {"low", "high"}) {
          ExperimentConfig c = base;
          c.kind = ExperimentKind::Fit;
          c.model = model;
          c.noise = noise;
          c.methods = {Method::Fenrir, Method::Rk};
          runs.emplace_back(tag + "-" + noise, c);
        }
      };
      if (suite == "lv" || suite == "all") fit_pair("lv", "lotka-volterra");
      if (suite == "fhn" || suite == "all") fit_pair("fhn", "fitzhugh-nagumo");
      if (suite == "seir" || suite == "all") {
        ExperimentConfig c = base;
        c.kind = ExperimentKind::Fit;
        c.model = "seir";
        c.noise = "low";
        c.methods = {Method::Fenrir, Method::Rk};
        runs.emplace_back("seir", c);
      }
      if (suite == "pendulum" || suite == "all") {
        ExperimentConfig c = base;
        c.kind = ExperimentKind::PendulumSweep;
        c.model = "pendulum";
        c.noise = "low";
        c.replicates = bench_flags.set(bench_flags.o_reps) ? base.replicates : 1;
        c.methods = {Method::Fenrir, Method::Rk};
        if (c.sweep_starts.empty()) c.sweep_starts = default_sweep_starts();
        runs.emplace_back("pendulum-sweep", c);
      }
      if (suite == "all") {
        ExperimentConfig c = base;
        c.kind = ExperimentKind::ModelSelect;
        c.model = "lotka-volterra";
        c.noise = "low";
        c.methods = {Method::Fenrir};
        runs.emplace_back("model-select", c);
      }
      for (auto& [tag, c] : runs) {
        c.out_dir = (root / tag).string();
        const int code = run_and_emit(c, false);
        if (code != 0) return code;
      }
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return 0;
}
