#pragma once

#include <string>
#include <vector>

#include "fenrir/types.hpp"

namespace fenrir {

enum class ParamRole { Ode, Init, Noise, Diffusion };
enum class Transform { Identity, Log, LogitBox };

const char* to_string(ParamRole role);
const char* to_string(Transform transform);

/// One scalar parameter of an estimation problem.
///
/// Identity leaves the value unchanged (and clamps to finite bounds on the
/// way back); Log optimises log(x), squashed into [log a, log b] when both
/// bounds are finite and positive; LogitBox maps R onto (a, b) with a
/// logistic sigmoid.
struct ParamSpec {
  std::string name;
  ParamRole role = ParamRole::Ode;
  Bounds bounds;
  Transform transform = Transform::Identity;
};

double to_unconstrained(const ParamSpec& spec, double x);
double to_natural(const ParamSpec& spec, double z);

/// Ordered list of named parameters; vectors passed in and out follow that order.
class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(std::vector<ParamSpec> specs);

  /// Throws InvalidArgument on duplicate names, empty bounds, a log
  /// transform with a negative lower bound, or noise/diffusion entries
  /// without the log transform.
  void add(ParamSpec spec);

  int size() const { return static_cast<int>(specs_.size()); }
  const ParamSpec& operator[](int i) const { return specs_[i]; }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  /// -1 when absent.
  int index_of(const std::string& name) const;
  std::vector<int> indices(ParamRole role) const;

  Vector to_unconstrained(const Vector& natural) const;
  Vector to_natural(const Vector& z) const;
  bool contains(const Vector& natural) const;
  /// Moves every entry strictly inside its bounds by a relative margin of
  /// the interval width (absolute 1e-8 for half-open intervals).
  Vector clamp_inside(const Vector& natural, double margin = 1e-8) const;

 private:
  std::vector<ParamSpec> specs_;
};

}  // namespace fenrir
