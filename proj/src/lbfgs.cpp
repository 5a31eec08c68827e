#include "fenrir/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fenrir {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 40;

struct Counter {
  const ScalarFunction& f;
  int count = 0;
  double operator()(const Vector& x) {
    ++count;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  }
};

struct Pair {
  Vector s, y;
  double rho;
};

Vector two_loop(const std::deque<Pair>& mem, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(mem.size());
  for (size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  if (!mem.empty()) q *= mem.back().s.dot(mem.back().y) / mem.back().y.squaredNorm();
  for (size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

}  // namespace

const char* to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::Stalled: return "stalled";
    case FitStatus::MaxIter: return "max_iter";
  }
  return "?";
}

Vector fd_gradient(const ScalarFunction& f, const Vector& x, double fx, double rel_step, double penalty,
                   int* evaluations) {
  Vector g(x.size());
  Vector xp = x;
  int evals = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double hi = xp(i) - x(i);
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double lo = x(i) - xp(i);
    const double fm = f(xp);
    xp(i) = x(i);
    evals += 2;
    const bool ok_p = std::isfinite(fp) && fp < penalty;
    const bool ok_m = std::isfinite(fm) && fm < penalty;
    const bool ok_0 = std::isfinite(fx) && fx < penalty;
    if (ok_p && ok_m) {
      g(i) = (fp - fm) / (hi + lo);
    } else if (ok_p && ok_0) {
      g(i) = (fp - fx) / hi;
    } else if (ok_m && ok_0) {
      g(i) = (fx - fm) / lo;
    } else {
      g(i) = 0.0;
    }
  }
  if (evaluations) *evaluations += evals;
  return g;
}

LbfgsResult lbfgs_minimize(const ScalarFunction& f, const Vector& x0, const LbfgsOptions& o) {
  Counter eval{f};
  LbfgsResult out;
  Vector x = x0;
  double fx = eval(x);
  out.trace.push_back(fx);
  const double f_start = fx;
  Vector g = fd_gradient(std::ref(eval), x, fx, o.fd_rel_step, o.penalty);
  std::deque<Pair> mem;
  out.status = FitStatus::MaxIter;

  for (int iter = 0; iter < o.max_iter; ++iter) {
    if (x.size() == 0 || g.lpNorm<Eigen::Infinity>() < o.g_inf_tol) {
      out.status = FitStatus::Converged;
      break;
    }
    Vector p = two_loop(mem, g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      mem.clear();
      p = -g;
      slope = -g.squaredNorm();
    }

    // Armijo backtracking; one retry along steepest descent with a fresh memory.
    bool accepted = false;
    Vector x_new;
    double f_new = fx;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        if (mem.empty()) break;
        mem.clear();
        p = -g;
        slope = -g.squaredNorm();
      }
      double alpha = mem.empty() ? std::min(1.0, 1.0 / std::max(p.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
      const double pmax = p.lpNorm<Eigen::Infinity>();
      if (alpha * pmax > o.max_step) alpha = o.max_step / pmax;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        x_new = x + alpha * p;
        f_new = eval(x_new);
        if (f_new < o.penalty && f_new <= fx + kArmijo * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= f_new >= o.penalty ? 0.1 : 0.5;
        if (alpha * pmax < 1e-14 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) break;
      }
    }
    if (!accepted) {
      out.status = FitStatus::Stalled;
      break;
    }

    Vector g_new = fd_gradient(std::ref(eval), x_new, f_new, o.fd_rel_step, o.penalty);
    Vector s = x_new - x;
    Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(mem.size()) > o.memory) mem.pop_front();
    }
    const double df = std::abs(fx - f_new);
    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    out.trace.push_back(fx);
    out.iterations = iter + 1;
    if (df < o.f_rel_tol * (1.0 + std::abs(fx)) || g.lpNorm<Eigen::Infinity>() < o.g_inf_tol) {
      out.status = FitStatus::Converged;
      break;
    }
  }
  if (!(fx < f_start) && out.status != FitStatus::Converged) out.status = FitStatus::Stalled;
  out.x = std::move(x);
  out.f = fx;
  out.evaluations = eval.count;
  return out;
}

}  // namespace fenrir
