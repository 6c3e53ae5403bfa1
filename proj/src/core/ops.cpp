#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "core/error.hpp"

namespace mimgan::op {
namespace {

Graph& same_graph(Var a, Var b) {
  Graph& g = a.graph();
  if (&b.graph() != &g) throw DomainError("operands belong to different graphs");
  return g;
}

enum class Broadcast { kNone, kLeft, kRight };

Broadcast check_elementwise(const char* name, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (b.size() == 1) return Broadcast::kRight;
  if (a.size() == 1) return Broadcast::kLeft;
  throw ShapeError(std::string(name) + ": shape mismatch " + shape_to_string(a.shape()) +
                   " vs " + shape_to_string(b.shape()));
}

// Shared driver for binary elementwise ops. `f(x, y)` is the value and
// `dfx(x, y, z)` / `dfy(x, y, z)` the partials given the output z.
template <class F, class Dx, class Dy>
Var binary(const char* name, Var a, Var b, F f, Dx dfx, Dy dfy) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast bc = check_elementwise(name, av, bv);
  const Tensor& big = bc == Broadcast::kLeft ? bv : av;
  const std::size_t n = big.size();
  std::vector<double> out(n);
  auto xa = av.data();
  auto xb = bv.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = bc == Broadcast::kLeft ? xa[0] : xa[i];
    const double y = bc == Broadcast::kRight ? xb[0] : xb[i];
    out[i] = f(x, y);
  }
  return g.record(Tensor(big.shape(), std::move(out)), {a, b},
                  [bc, dfx, dfy](const GradContext& c) {
                    auto xa = c.inputs[0]->data();
                    auto xb = c.inputs[1]->data();
                    auto z = c.output.data();
                    for (std::size_t i = 0; i < c.out_grad.size(); ++i) {
                      const std::size_t ia = bc == Broadcast::kLeft ? 0 : i;
                      const std::size_t ib = bc == Broadcast::kRight ? 0 : i;
                      const double go = c.out_grad[i];
                      if (!c.in_grads[0].empty()) c.in_grads[0][ia] += go * dfx(xa[ia], xb[ib], z[i]);
                      if (!c.in_grads[1].empty()) c.in_grads[1][ib] += go * dfy(xa[ia], xb[ib], z[i]);
                    }
                  });
}

// `df(x, z)` is the derivative given input x and output z.
template <class F, class D>
Var unary(Var a, F f, D df) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  std::vector<double> out(av.size());
  auto x = av.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return g.record(Tensor(av.shape(), std::move(out)), {a}, [df](const GradContext& c) {
    auto x = c.inputs[0]->data();
    auto z = c.output.data();
    auto gi = c.in_grads[0];
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += c.out_grad[i] * df(x[i], z[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  for (double v : b.value().data()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double z) { return -z / y; });
}

Var add(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var mul(Var a, double c) {
  return unary(a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Var rsub(double c, Var a) {
  return unary(a, [c](double x) { return c - x; }, [](double, double) { return -1.0; });
}

Var neg(Var a) { return mul(a, -1.0); }

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_to_string(av.shape()) + " by " +
                     shape_to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  std::vector<double> out(m * n, 0.0);
  auto x = av.data();
  auto y = bv.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = x[i * k + p];
      const double* yr = y.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * yr[j];
    }
  }
  return g.record(Tensor({m, n}, std::move(out)), {a, b}, [m, k, n](const GradContext& c) {
    auto x = c.inputs[0]->data();
    auto y = c.inputs[1]->data();
    auto go = c.out_grad;
    if (!c.in_grads[0].empty()) {
      // dA = dC * B^T
      auto ga = c.in_grads[0];
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * y[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (!c.in_grads[1].empty()) {
      // dB = A^T * dC
      auto gb = c.in_grads[1];
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double s = x[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * go[i * n + j];
        }
      }
    }
  });
}

Var add_bias(Var a, Var bias) {
  Graph& g = same_graph(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  const std::size_t cols = av.shape().back();
  if (bv.rank() != 1 || bv.dim(0) != cols) {
    throw ShapeError("add_bias: bias " + shape_to_string(bv.shape()) + " does not match " +
                     shape_to_string(av.shape()));
  }
  std::vector<double> out(av.data().begin(), av.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % cols];
  return g.record(Tensor(av.shape(), std::move(out)), {a, bias}, [cols](const GradContext& c) {
    if (!c.in_grads[0].empty()) {
      for (std::size_t i = 0; i < c.out_grad.size(); ++i) c.in_grads[0][i] += c.out_grad[i];
    }
    if (!c.in_grads[1].empty()) {
      for (std::size_t i = 0; i < c.out_grad.size(); ++i) c.in_grads[1][i % cols] += c.out_grad[i];
    }
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double z) { return z; });
}

Var ln(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw DomainError("ln: non-positive input " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double z) { return 1.0 - z * z; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double z) { return z * (1.0 - z); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(x); });
}

Var abs(Var a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sqrt(Var a) {
  for (double v : a.value().data()) {
    if (v < 0.0) throw DomainError("sqrt: negative input " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double, double z) { return 0.5 / z; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp: lo > hi");
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  Graph& g = a.graph();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return g.record(Tensor::scalar(s), {a}, [](const GradContext& c) {
    const double go = c.out_grad[0];
    for (double& v : c.in_grads[0]) v += go;
  });
}

Var mean(Var a) { return mul(sum(a), 1.0 / static_cast<double>(a.size())); }

Var row_sum(Var a) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  const std::size_t cols = av.shape().back();
  const std::size_t rows = av.size() / cols;
  Shape out_shape(av.shape().begin(), av.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  std::vector<double> out(rows, 0.0);
  auto x = av.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) out[r] += x[r * cols + j];
  }
  return g.record(Tensor(std::move(out_shape), std::move(out)), {a},
                  [cols](const GradContext& c) {
                    auto gi = c.in_grads[0];
                    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += c.out_grad[i / cols];
                  });
}

namespace {

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

}  // namespace

Var concat(Var a, Var b, std::size_t axis) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  bool ok = av.rank() == bv.rank() && axis < av.rank();
  for (std::size_t i = 0; ok && i < av.rank(); ++i) {
    if (i != axis && av.dim(i) != bv.dim(i)) ok = false;
  }
  if (!ok) {
    throw ShapeError("concat on axis " + std::to_string(axis) + ": " +
                     shape_to_string(av.shape()) + " vs " + shape_to_string(bv.shape()));
  }
  const AxisView va = axis_view(av.shape(), axis);
  const AxisView vb = axis_view(bv.shape(), axis);
  Shape out_shape = av.shape();
  out_shape[axis] += bv.dim(axis);
  const std::size_t ca = va.len * va.inner, cb = vb.len * vb.inner;
  std::vector<double> out;
  out.reserve(av.size() + bv.size());
  for (std::size_t o = 0; o < va.outer; ++o) {
    out.insert(out.end(), av.data().begin() + o * ca, av.data().begin() + (o + 1) * ca);
    out.insert(out.end(), bv.data().begin() + o * cb, bv.data().begin() + (o + 1) * cb);
  }
  return g.record(Tensor(std::move(out_shape), std::move(out)), {a, b},
                  [outer = va.outer, ca, cb](const GradContext& c) {
                    for (std::size_t o = 0; o < outer; ++o) {
                      const double* src = c.out_grad.data() + o * (ca + cb);
                      if (!c.in_grads[0].empty()) {
                        for (std::size_t i = 0; i < ca; ++i) c.in_grads[0][o * ca + i] += src[i];
                      }
                      if (!c.in_grads[1].empty()) {
                        for (std::size_t i = 0; i < cb; ++i) c.in_grads[1][o * cb + i] += src[ca + i];
                      }
                    }
                  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  if (axis >= av.rank() || begin >= end || end > av.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") on axis " + std::to_string(axis) + " of " + shape_to_string(av.shape()));
  }
  const AxisView v = axis_view(av.shape(), axis);
  Shape out_shape = av.shape();
  out_shape[axis] = end - begin;
  const std::size_t span_len = (end - begin) * v.inner;
  std::vector<double> out;
  out.reserve(v.outer * span_len);
  for (std::size_t o = 0; o < v.outer; ++o) {
    auto first = av.data().begin() + (o * v.len + begin) * v.inner;
    out.insert(out.end(), first, first + span_len);
  }
  return g.record(Tensor(std::move(out_shape), std::move(out)), {a},
                  [v, begin, span_len](const GradContext& c) {
                    for (std::size_t o = 0; o < v.outer; ++o) {
                      double* dst = c.in_grads[0].data() + (o * v.len + begin) * v.inner;
                      const double* src = c.out_grad.data() + o * span_len;
                      for (std::size_t i = 0; i < span_len; ++i) dst[i] += src[i];
                    }
                  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = a.graph();
  Tensor out = a.value().reshaped(std::move(shape));
  return g.record(std::move(out), {a}, [](const GradContext& c) {
    for (std::size_t i = 0; i < c.out_grad.size(); ++i) c.in_grads[0][i] += c.out_grad[i];
  });
}

}  // namespace mimgan::op
