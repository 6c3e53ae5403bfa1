#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace mimgan {
namespace {

double evaluate(const ParamObjective& f) {
  Graph g;
  const double v = f(g).item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult finite_diff_check(const ParamObjective& f, Tensor& params, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw DomainError("finite_diff_check: epsilon must be positive, got " + std::to_string(epsilon));
  }

  params.zero_grad();
  {
    Graph g;
    Var root = f(g);
    if (!std::isfinite(root.item())) throw NumericError("finite_diff_check: objective is not finite");
    g.backward(root);
  }
  const std::vector<double> analytic(params.grad().begin(), params.grad().end());

  GradCheckResult result;
  auto p = params.mutable_data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + epsilon;
    const double up = evaluate(f);
    p[i] = saved - epsilon;
    const double down = evaluate(f);
    p[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double rel =
        std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + 1e-12);
    if (i == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
  }
  return result;
}

GradCheckResult directional_check(const ParamObjective& f, Tensor& params, const Tensor& direction, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw DomainError("directional_check: epsilon must be positive, got " + std::to_string(epsilon));
  }
  if (direction.shape() != params.shape()) throw ShapeError("directional_check: direction shape differs from params");

  params.zero_grad();
  {
    Graph g;
    Var root = f(g);
    if (!std::isfinite(root.item())) throw NumericError("directional_check: objective is not finite");
    g.backward(root);
  }
  double analytic = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) analytic += params.grad()[i] * direction[i];

  auto p = params.mutable_data();
  const std::vector<double> saved(p.begin(), p.end());
  auto shifted = [&](double step) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = saved[i] + step * direction[i];
    return evaluate(f);
  };
  const double up = shifted(epsilon);
  const double down = shifted(-epsilon);
  std::copy(saved.begin(), saved.end(), p.begin());

  GradCheckResult result;
  result.analytic = analytic;
  result.numeric = (up - down) / (2.0 * epsilon);
  result.max_rel_error = std::abs(analytic - result.numeric) / (std::abs(analytic) + std::abs(result.numeric) + 1e-12);
  return result;
}

double finite_diff_check(const LeafObjective& f, const Tensor& params, double epsilon) {
  Tensor copy(params.shape(), std::vector<double>(params.data().begin(), params.data().end()));
  return finite_diff_check([&](Graph& g) { return f(g, g.param(copy)); }, copy, epsilon)
      .max_rel_error;
}

}  // namespace mimgan
