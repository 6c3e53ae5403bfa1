#include "core/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace mimgan {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Dims {
  std::size_t m, steps, d, h;
};

// Activated gates, cell states and tanh(cell) for every (row, step), kept for
// the backward pass. Layout is (m x S x 4h) and (m x S x h).
struct Cache {
  std::vector<double> gates;
  std::vector<double> cell;
  std::vector<double> tanh_cell;
};

Dims check_dims(const Tensor& x, const Tensor& w, const Tensor& u, const Tensor& b,
                const Tensor& h0, const Tensor& c0) {
  if (x.rank() != 3) throw ShapeError("lstm: input must be (m x S x d), got " + shape_to_string(x.shape()));
  Dims dm{x.dim(0), x.dim(1), x.dim(2), 0};
  if (u.rank() != 2 || u.dim(0) % 4 != 0) {
    throw ShapeError("lstm: recurrent weights must be (4h x h), got " + shape_to_string(u.shape()));
  }
  dm.h = u.dim(0) / 4;
  const Shape ws{4 * dm.h, dm.d}, us{4 * dm.h, dm.h}, bs{4 * dm.h}, ss{dm.m, dm.h};
  if (w.shape() != ws) {
    throw ShapeError("lstm: input weights " + shape_to_string(w.shape()) + " expected " + shape_to_string(ws));
  }
  if (u.shape() != us) {
    throw ShapeError("lstm: recurrent weights " + shape_to_string(u.shape()) + " expected " + shape_to_string(us));
  }
  if (b.shape() != bs) {
    throw ShapeError("lstm: bias " + shape_to_string(b.shape()) + " expected " + shape_to_string(bs));
  }
  if (h0.shape() != ss || c0.shape() != ss) {
    throw ShapeError("lstm: state " + shape_to_string(h0.shape()) + "/" + shape_to_string(c0.shape()) +
                     " expected " + shape_to_string(ss));
  }
  return dm;
}

// Forward recurrence. Returns hidden outputs (m x S x h) and fills `cache`.
std::vector<double> run_forward(const Dims& dm, std::span<const double> x, std::span<const double> w,
                                std::span<const double> u, std::span<const double> b,
                                std::span<const double> h0, std::span<const double> c0, Cache& cache) {
  const std::size_t m = dm.m, S = dm.steps, d = dm.d, h = dm.h, g4 = 4 * h;
  std::vector<double> out(m * S * h);
  cache.gates.assign(m * S * g4, 0.0);
  cache.cell.assign(m * S * h, 0.0);
  cache.tanh_cell.assign(m * S * h, 0.0);
  std::vector<double> pre(g4);

  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t t = 0; t < S; ++t) {
      const double* xt = x.data() + (r * S + t) * d;
      const double* hp = t == 0 ? h0.data() + r * h : out.data() + (r * S + t - 1) * h;
      const double* cp = t == 0 ? c0.data() + r * h : cache.cell.data() + (r * S + t - 1) * h;
      for (std::size_t j = 0; j < g4; ++j) {
        double acc = b[j];
        const double* wr = w.data() + j * d;
        for (std::size_t k = 0; k < d; ++k) acc += wr[k] * xt[k];
        const double* ur = u.data() + j * h;
        for (std::size_t k = 0; k < h; ++k) acc += ur[k] * hp[k];
        pre[j] = acc;
      }
      double* gt = cache.gates.data() + (r * S + t) * g4;
      double* ct = cache.cell.data() + (r * S + t) * h;
      double* tc = cache.tanh_cell.data() + (r * S + t) * h;
      double* ht = out.data() + (r * S + t) * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double ig = sigmoid(pre[k]);
        const double fg = sigmoid(pre[h + k]);
        const double cg = std::tanh(pre[2 * h + k]);
        const double og = sigmoid(pre[3 * h + k]);
        gt[k] = ig;
        gt[h + k] = fg;
        gt[2 * h + k] = cg;
        gt[3 * h + k] = og;
        ct[k] = fg * cp[k] + ig * cg;
        tc[k] = std::tanh(ct[k]);
        ht[k] = og * tc[k];
      }
    }
  }
  return out;
}

}  // namespace

LstmLayer LstmLayer::zeros(std::size_t input_size, std::size_t hidden) {
  if (input_size == 0 || hidden == 0) throw ShapeError("lstm: sizes must be positive");
  LstmLayer l;
  l.input_size = input_size;
  l.hidden = hidden;
  l.w = Tensor({4 * hidden, input_size});
  l.u = Tensor({4 * hidden, hidden});
  l.b = Tensor({4 * hidden});
  return l;
}

void LstmLayer::validate() const {
  const Shape ws{4 * hidden, input_size}, us{4 * hidden, hidden}, bs{4 * hidden};
  if (w.shape() != ws || u.shape() != us || b.shape() != bs) {
    throw ShapeError("lstm layer (d=" + std::to_string(input_size) + ", h=" + std::to_string(hidden) +
                     ") has weights " + shape_to_string(w.shape()) + ", " + shape_to_string(u.shape()) +
                     ", " + shape_to_string(b.shape()));
  }
}

LstmOutput lstm_forward(const LstmLayer& layer, const Tensor& sequence, const LstmState& initial) {
  layer.validate();
  if (sequence.rank() != 2 || sequence.dim(1) != layer.input_size) {
    throw ShapeError("lstm_forward: sequence " + shape_to_string(sequence.shape()) +
                     " does not match input size " + std::to_string(layer.input_size));
  }
  const Shape state_shape{layer.hidden};
  if (initial.h.shape() != state_shape || initial.c.shape() != state_shape) {
    throw ShapeError("lstm_forward: initial state must have shape " + shape_to_string(state_shape));
  }
  const std::size_t S = sequence.dim(0), h = layer.hidden;
  const Tensor x = sequence.reshaped({1, S, layer.input_size});
  const Tensor h0 = initial.h.reshaped({1, h});
  const Tensor c0 = initial.c.reshaped({1, h});
  const Dims dm = check_dims(x, layer.w, layer.u, layer.b, h0, c0);
  Cache cache;
  std::vector<double> out =
      run_forward(dm, x.data(), layer.w.data(), layer.u.data(), layer.b.data(), h0.data(), c0.data(), cache);

  LstmOutput result;
  result.final_state.h = Tensor({h}, std::vector<double>(out.end() - h, out.end()));
  result.final_state.c = Tensor({h}, std::vector<double>(cache.cell.end() - h, cache.cell.end()));
  result.outputs = Tensor({S, h}, std::move(out));
  return result;
}

Var lstm_sequence(Var x, Var w, Var u, Var b, Var h0, Var c0) {
  Graph& g = x.graph();
  const Dims dm = check_dims(x.value(), w.value(), u.value(), b.value(), h0.value(), c0.value());
  auto cache = std::make_shared<Cache>();
  std::vector<double> out = run_forward(dm, x.value().data(), w.value().data(), u.value().data(),
                                        b.value().data(), h0.value().data(), c0.value().data(), *cache);

  auto backward = [dm, cache](const GradContext& c) {
    const std::size_t m = dm.m, S = dm.steps, d = dm.d, h = dm.h, g4 = 4 * h;
    auto x = c.inputs[0]->data();
    auto w = c.inputs[1]->data();
    auto u = c.inputs[2]->data();
    auto h0 = c.inputs[4]->data();
    auto c0 = c.inputs[5]->data();
    auto hout = c.output.data();
    auto gx = c.in_grads[0];
    auto gw = c.in_grads[1];
    auto gu = c.in_grads[2];
    auto gb = c.in_grads[3];
    auto gh0 = c.in_grads[4];
    auto gc0 = c.in_grads[5];

    std::vector<double> dh_next(h), dc_next(h), da(g4);
    for (std::size_t r = 0; r < m; ++r) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      std::fill(dc_next.begin(), dc_next.end(), 0.0);
      for (std::size_t t = S; t-- > 0;) {
        const std::size_t row = r * S + t;
        const double* gt = cache->gates.data() + row * g4;
        const double* tc = cache->tanh_cell.data() + row * h;
        const double* cp = t == 0 ? c0.data() + r * h : cache->cell.data() + (row - 1) * h;
        const double* hp = t == 0 ? h0.data() + r * h : hout.data() + (row - 1) * h;
        const double* dy = c.out_grad.data() + row * h;
        for (std::size_t k = 0; k < h; ++k) {
          const double ig = gt[k], fg = gt[h + k], cg = gt[2 * h + k], og = gt[3 * h + k];
          const double dh = dy[k] + dh_next[k];
          const double dcell = dh * og * (1.0 - tc[k] * tc[k]) + dc_next[k];
          da[k] = dcell * cg * ig * (1.0 - ig);
          da[h + k] = dcell * cp[k] * fg * (1.0 - fg);
          da[2 * h + k] = dcell * ig * (1.0 - cg * cg);
          da[3 * h + k] = dh * tc[k] * og * (1.0 - og);
          dc_next[k] = dcell * fg;
        }
        const double* xt = x.data() + row * d;
        if (!gw.empty()) {
          for (std::size_t j = 0; j < g4; ++j) {
            const double s = da[j];
            double* gwr = gw.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) gwr[k] += s * xt[k];
          }
        }
        if (!gu.empty()) {
          for (std::size_t j = 0; j < g4; ++j) {
            const double s = da[j];
            double* gur = gu.data() + j * h;
            for (std::size_t k = 0; k < h; ++k) gur[k] += s * hp[k];
          }
        }
        if (!gb.empty()) {
          for (std::size_t j = 0; j < g4; ++j) gb[j] += da[j];
        }
        if (!gx.empty()) {
          double* gxt = gx.data() + row * d;
          for (std::size_t j = 0; j < g4; ++j) {
            const double s = da[j];
            const double* wr = w.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) gxt[k] += s * wr[k];
          }
        }
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t j = 0; j < g4; ++j) {
          const double s = da[j];
          const double* ur = u.data() + j * h;
          for (std::size_t k = 0; k < h; ++k) dh_next[k] += s * ur[k];
        }
      }
      if (!gh0.empty()) {
        for (std::size_t k = 0; k < h; ++k) gh0[r * h + k] += dh_next[k];
      }
      if (!gc0.empty()) {
        for (std::size_t k = 0; k < h; ++k) gc0[r * h + k] += dc_next[k];
      }
    }
  };

  return g.record(Tensor({dm.m, dm.steps, dm.h}, std::move(out)), {x, w, u, b, h0, c0},
                  std::move(backward));
}

}  // namespace mimgan
