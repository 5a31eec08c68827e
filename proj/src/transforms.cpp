#include "fenrir/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace fenrir {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Logit of the position of x in (a, b), computed from the nearer end so
// values close to either bound keep their relative precision.
double logit_in(double x, double a, double b) {
  return std::log(x - a) - std::log(b - x);
}

double from_unit(double u, double a, double b) { return a + (b - a) * u; }

bool boxed_log(const Bounds& b) { return b.lower > 0.0 && std::isfinite(b.upper); }

}  // namespace

const char* to_string(ParamRole role) {
  switch (role) {
    case ParamRole::Ode: return "ode";
    case ParamRole::Init: return "init";
    case ParamRole::Noise: return "noise";
    case ParamRole::Diffusion: return "diffusion";
  }
  return "?";
}

const char* to_string(Transform transform) {
  switch (transform) {
    case Transform::Identity: return "identity";
    case Transform::Log: return "log";
    case Transform::LogitBox: return "logit-box";
  }
  return "?";
}

double to_unconstrained(const ParamSpec& spec, double x) {
  const Bounds& b = spec.bounds;
  switch (spec.transform) {
    case Transform::Identity: return x;
    case Transform::Log:
      if (boxed_log(b)) return logit_in(std::log(x), std::log(b.lower), std::log(b.upper));
      return std::log(x);
    case Transform::LogitBox: return logit_in(x, b.lower, b.upper);
  }
  return x;
}

double to_natural(const ParamSpec& spec, double z) {
  const Bounds& b = spec.bounds;
  switch (spec.transform) {
    case Transform::Identity: return std::clamp(z, b.lower, b.upper);
    case Transform::Log:
      if (boxed_log(b)) {
        const double x = std::exp(from_unit(sigmoid(z), std::log(b.lower), std::log(b.upper)));
        return std::clamp(x, b.lower, b.upper);
      }
      return std::clamp(std::exp(z), b.lower, b.upper);
    case Transform::LogitBox: return std::clamp(from_unit(sigmoid(z), b.lower, b.upper), b.lower, b.upper);
  }
  return z;
}

ParamSpace::ParamSpace(std::vector<ParamSpec> specs) {
  for (ParamSpec& s : specs) add(std::move(s));
}

void ParamSpace::add(ParamSpec spec) {
  if (index_of(spec.name) >= 0) throw InvalidArgument("parameter '" + spec.name + "' defined twice");
  if (!(spec.bounds.lower < spec.bounds.upper))
    throw InvalidArgument("parameter '" + spec.name + "' has empty bounds");
  if ((spec.role == ParamRole::Noise || spec.role == ParamRole::Diffusion) && spec.transform != Transform::Log)
    throw InvalidArgument("parameter '" + spec.name + "' (noise/diffusion) must use the log transform");
  if (spec.transform == Transform::Log && spec.bounds.lower < 0.0)
    throw InvalidArgument("parameter '" + spec.name + "': log transform needs a non-negative lower bound");
  if (spec.transform == Transform::LogitBox && !spec.bounds.finite())
    throw InvalidArgument("parameter '" + spec.name + "': logit-box transform needs finite bounds");
  specs_.push_back(std::move(spec));
}

int ParamSpace::index_of(const std::string& name) const {
  for (size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> ParamSpace::indices(ParamRole role) const {
  std::vector<int> out;
  for (size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].role == role) out.push_back(static_cast<int>(i));
  return out;
}

Vector ParamSpace::to_unconstrained(const Vector& natural) const {
  if (natural.size() != size()) throw InvalidArgument("ParamSpace: vector has wrong length");
  Vector z(size());
  for (int i = 0; i < size(); ++i) z(i) = fenrir::to_unconstrained(specs_[i], natural(i));
  return z;
}

Vector ParamSpace::to_natural(const Vector& z) const {
  if (z.size() != size()) throw InvalidArgument("ParamSpace: vector has wrong length");
  Vector x(size());
  for (int i = 0; i < size(); ++i) x(i) = fenrir::to_natural(specs_[i], z(i));
  return x;
}

bool ParamSpace::contains(const Vector& natural) const {
  if (natural.size() != size()) return false;
  for (int i = 0; i < size(); ++i)
    if (!specs_[i].bounds.contains(natural(i))) return false;
  return true;
}

Vector ParamSpace::clamp_inside(const Vector& natural, double margin) const {
  if (natural.size() != size()) throw InvalidArgument("ParamSpace: vector has wrong length");
  Vector x = natural;
  for (int i = 0; i < size(); ++i) {
    const Bounds& b = specs_[i].bounds;
    double lo = b.lower, hi = b.upper;
    if (specs_[i].transform == Transform::Log && boxed_log(b)) {
      // Margin in log space, matching the optimisation coordinates.
      const double w = std::log(hi) - std::log(lo);
      lo = std::exp(std::log(lo) + margin * w);
      hi = std::exp(std::log(hi) - margin * w);
    } else if (b.finite()) {
      const double w = hi - lo;
      lo += margin * w;
      hi -= margin * w;
    } else {
      if (std::isfinite(lo)) lo += margin * std::max(1.0, std::abs(lo));
      if (std::isfinite(hi)) hi -= margin * std::max(1.0, std::abs(hi));
    }
    if (specs_[i].transform == Transform::Log && !(lo > 0.0)) lo = std::max(lo, 1e-300);
    x(i) = std::clamp(x(i), lo, hi);
  }
  return x;
}

}  // namespace fenrir
