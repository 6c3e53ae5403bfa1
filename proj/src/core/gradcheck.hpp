#pragma once

#include <functional>

#include "core/graph.hpp"

namespace mimgan {

/// Builds a scalar in a fresh graph, reading `params` through Graph::param.
using ParamObjective = std::function<Var(Graph&)>;
/// Builds a scalar from a leaf holding the parameters.
using LeafObjective = std::function<Var(Graph&, Var)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference check of d f / d params.
///
/// Per coordinate: |analytic - numeric| / (|analytic| + |numeric| + 1e-12),
/// numeric = (f(p + eps e_i) - f(p - eps e_i)) / 2 eps. `params` is perturbed
/// in place and restored; its grad slot is overwritten.
///
/// Throws DomainError when epsilon <= 0 and NumericError when f is not
/// finite at any evaluation point.
GradCheckResult finite_diff_check(const ParamObjective& f, Tensor& params, double epsilon);

/// Directional variant: compares <grad f, direction> with
/// (f(p + eps d) - f(p - eps d)) / 2 eps under the same relative error.
/// Suited to deep compositions where some coordinates are structurally tiny
/// and a per-coordinate ratio only measures roundoff. Throws ShapeError when
/// `direction` does not match `params`.
GradCheckResult directional_check(const ParamObjective& f, Tensor& params, const Tensor& direction, double epsilon);

/// Same check for an objective expressed over a leaf.
double finite_diff_check(const LeafObjective& f, const Tensor& params, double epsilon);

}  // namespace mimgan
