#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/loss.hpp"
#include "core/ops.hpp"

namespace mimgan {

std::string to_string(LossKind kind) { return kind == LossKind::kMim ? "mim" : "log"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "mim") return LossKind::kMim;
  if (name == "log") return LossKind::kLog;
  throw ConfigError("unknown loss '" + name + "' (expected mim or log)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (d_steps_per_g_step == 0) throw ConfigError("d_steps must be at least 1");
  for (auto [name, v] : {std::pair{"lr_d", lr_d}, {"lr_g", lr_g}, {"weight_decay", weight_decay}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1) and eps must be positive");
  }
  if (!(score_clamp > 0.0)) throw ConfigError("score_clamp must be positive");
  if (rolling_window == 0 || stop_patience == 0 || !(stop_tolerance > 0.0)) {
    throw ConfigError("early-stop window, patience and tolerance must be positive");
  }
}

void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                std::span<double> v, std::uint64_t step, const AdamWSettings& s) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ShapeError("adamw_step: params, grads and moments must have equal length");
  }
  if (step == 0) throw DomainError("adamw_step: step count is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= s.lr * s.weight_decay * params[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    params[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  if (grads.size() != params.size()) throw ShapeError("sgd_step: params and grads must have equal length");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void TrainState::validate() const {
  auto tensors = named_tensors(const_cast<GeneratorNet&>(params.generator));
  if (g_opt.m.size() != tensors.size() || g_opt.v.size() != tensors.size()) {
    throw DomainError("optimizer state does not cover every generator tensor");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (g_opt.m[i].shape() != tensors[i].second->shape() || g_opt.v[i].shape() != tensors[i].second->shape()) {
      throw DomainError("optimizer moments for " + tensors[i].first + " do not match the parameter shape");
    }
  }
  if (history.size() != step) throw DomainError("loss history length differs from the step count");
}

TrainState init_train_state(const NetConfig& net, const TrainConfig& config) {
  net.validate();
  config.validate();
  TrainState s;
  s.params = init_params(net, config.seed);
  for (const auto& [name, t] : named_tensors(s.params.generator)) {
    s.g_opt.m.emplace_back(t->shape());
    s.g_opt.v.emplace_back(t->shape());
  }
  // Decorrelate the training stream from the initializer stream.
  s.rng.seed(config.seed ^ 0x9e3779b97f4a7c15ULL);
  return s;
}

Tensor sample_latent(std::mt19937_64& rng, std::size_t m, std::size_t window_length, std::size_t latent_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor z({m, window_length, latent_dim});
  for (double& v : z.mutable_data()) v = normal(rng);
  return z;
}

namespace {

void zero_grads(const std::vector<std::pair<std::string, Tensor*>>& tensors) {
  for (const auto& [name, t] : tensors) t->zero_grad();
}

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

[[noreturn]] void diverge(const std::string& what, const TrainState& before) {
  throw TrainingDiverged(what + " at step " + std::to_string(before.step),
                         std::make_shared<const TrainState>(before));
}

struct DStepResult {
  double loss = 0.0;
  std::size_t clamps = 0;
};

DStepResult discriminator_step(TrainState& state, const Tensor& real, const TrainConfig& cfg,
                               const TrainState& before) {
  auto& p = state.params;
  const std::size_t m = real.dim(0), steps = real.dim(1);
  const Tensor fake = generate(p.generator, sample_latent(state.rng, m, steps, p.config.latent_dim));

  Graph g;
  Var d_real = discriminator_forward_train(g, p.discriminator, g.input(real));
  Var d_fake = discriminator_forward_train(g, p.discriminator, g.input(fake));
  Var loss = cfg.loss == LossKind::kMim ? loss::mim_d_loss(d_real, d_fake, cfg.score_clamp)
                                        : loss::log_d_loss(d_real, d_fake, cfg.score_clamp);
  if (!finite(d_real.value().data()) || !finite(d_fake.value().data()) || !std::isfinite(loss.item())) {
    diverge("non-finite discriminator loss", before);
  }
  auto tensors = named_tensors(p.discriminator);
  zero_grads(tensors);
  g.backward(loss);
  for (const auto& [name, t] : tensors) {
    if (!finite(t->grad())) diverge("non-finite gradient in " + name, before);
    sgd_step(t->mutable_data(), t->grad(), cfg.lr_d);
  }
  return {loss.item(), loss::count_clamped(d_real.value().data(), cfg.score_clamp) +
                           loss::count_clamped(d_fake.value().data(), cfg.score_clamp)};
}

double generator_step(TrainState& state, std::size_t m, std::size_t steps, const TrainConfig& cfg,
                      const TrainState& before) {
  auto& p = state.params;
  Tensor z = sample_latent(state.rng, m, steps, p.config.latent_dim);

  Graph g;
  Var fake = generator_forward_train(g, p.generator, g.input(std::move(z)));
  Var scores = discriminator_forward(g, p.discriminator, fake);
  // MIM: ascend mean exp(D); log baseline: descend mean ln(1 - sigmoid(D)).
  Var objective = cfg.loss == LossKind::kMim ? loss::mim_g_objective(scores, cfg.score_clamp)
                                             : loss::log_g_objective(scores, cfg.score_clamp);
  Var minimized = cfg.loss == LossKind::kMim ? op::neg(objective) : objective;
  if (!std::isfinite(objective.item())) diverge("non-finite generator objective", before);

  auto tensors = named_tensors(p.generator);
  zero_grads(tensors);
  g.backward(minimized);
  ++state.g_opt.step;
  const AdamWSettings s{cfg.lr_g, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.adam_eps};
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor* t = tensors[i].second;
    if (!finite(t->grad())) diverge("non-finite gradient in " + tensors[i].first, before);
    adamw_step(t->mutable_data(), t->grad(), state.g_opt.m[i].mutable_data(), state.g_opt.v[i].mutable_data(),
               state.g_opt.step, s);
  }
  return objective.item();
}

void clear_all_grads(NetworkParams& p) {
  for (const auto& [name, t] : named_tensors(p)) t->clear_grad();
}

}  // namespace

void train_epoch(TrainState& state, const data::WindowSet& windows, const TrainConfig& config,
                 const StepHook& on_step) {
  config.validate();
  if (windows.count() == 0) throw DomainError("train_epoch: no training windows");
  if (windows.features != state.params.config.features) {
    throw ShapeError("train_epoch: windows have " + std::to_string(windows.features) +
                     " variables, networks expect " + std::to_string(state.params.config.features));
  }
  std::vector<std::size_t> order(windows.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.rng);

  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    const Tensor real = windows.gather(std::span(order).subspan(begin, end - begin));
    const TrainState before = state;

    StepRecord rec;
    for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
      DStepResult d = discriminator_step(state, real, config, before);
      if (k == 0) rec.d_loss = d.loss;
      rec.clamp_events += d.clamps;
    }
    rec.g_objective = generator_step(state, end - begin, windows.window_length, config, before);
    clear_all_grads(state.params);
    rec.step = state.step++;
    state.history.push_back(rec);
    if (on_step) on_step(state, rec);
  }
  ++state.epoch;
}

double rolling_d_loss(const TrainState& state, std::size_t window) {
  if (state.history.empty()) throw DomainError("rolling_d_loss: empty history");
  const std::size_t k = std::min(window, state.history.size());
  double s = 0.0;
  for (std::size_t i = state.history.size() - k; i < state.history.size(); ++i) s += state.history[i].d_loss;
  return s / static_cast<double>(k);
}

void train(TrainState& state, const data::WindowSet& windows, const TrainConfig& config,
           const StepHook& on_step, const EpochHook& on_epoch) {
  config.validate();
  while (state.epoch < config.epochs && !state.stopped_early) {
    train_epoch(state, windows, config, on_step);
    const double r = rolling_d_loss(state, config.rolling_window);
    state.epoch_rolling.push_back(r);
    const bool in_band = std::abs(r - loss::kTwoSqrtE) <= config.stop_tolerance * loss::kTwoSqrtE;
    state.band_streak = in_band ? state.band_streak + 1 : 0;
    if (config.early_stop && config.loss == LossKind::kMim && state.band_streak >= config.stop_patience) {
      state.stopped_early = true;
    }
    if (on_epoch) on_epoch(state);
  }
}

CollapseReport collapse_report(const Tensor& generated, std::span<const Tensor> centroids, double distance_floor,
                               double coverage_floor) {
  if (generated.rank() != 3) throw ShapeError("collapse_report: expected (m x S x n), got " +
                                              shape_to_string(generated.shape()));
  const std::size_t m = generated.dim(0), steps = generated.dim(1), n = generated.dim(2);
  const std::size_t cells = steps * n;
  auto x = generated.data();

  CollapseReport r;
  r.per_variable_std.assign(n, 0.0);
  const double count = static_cast<double>(m * steps);
  for (std::size_t v = 0; v < n; ++v) {
    double mean = 0.0;
    for (std::size_t i = v; i < x.size(); i += n) mean += x[i];
    mean /= count;
    double sq = 0.0;
    for (std::size_t i = v; i < x.size(); i += n) sq += (x[i] - mean) * (x[i] - mean);
    r.per_variable_std[v] = std::sqrt(sq / count);
  }

  if (m > 1) {
    double total = 0.0;
    r.min_pairwise_distance = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
          const double d = x[a * cells + c] - x[b * cells + c];
          d2 += d * d;
        }
        const double d = std::sqrt(d2);
        total += d;
        r.min_pairwise_distance = std::min(r.min_pairwise_distance, d);
      }
    }
    r.mean_pairwise_distance = total / static_cast<double>(m * (m - 1) / 2);
  }
  r.collapsed = r.mean_pairwise_distance < distance_floor;

  if (!centroids.empty()) {
    for (const Tensor& c : centroids) {
      if (c.size() != cells) throw ShapeError("collapse_report: centroid " + shape_to_string(c.shape()) +
                                              " does not match window cells " + std::to_string(cells));
    }
    std::vector<std::size_t> hits(centroids.size(), 0);
    for (std::size_t a = 0; a < m; ++a) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroids.size(); ++k) {
        auto cd = centroids[k].data();
        double d2 = 0.0;
        for (std::size_t c = 0; c < cells; ++c) d2 += (x[a * cells + c] - cd[c]) * (x[a * cells + c] - cd[c]);
        if (d2 < best_d) {
          best_d = d2;
          best = k;
        }
      }
      ++hits[best];
    }
    for (std::size_t h : hits) r.mode_coverage.push_back(static_cast<double>(h) / static_cast<double>(m));
    r.min_mode_coverage = *std::min_element(r.mode_coverage.begin(), r.mode_coverage.end());
    r.mode_dropped = r.min_mode_coverage < coverage_floor;
  }
  return r;
}

CollapseReport collapse_monitor(const GeneratorNet& net, std::size_t count, std::size_t window_length,
                                std::uint64_t seed, std::span<const Tensor> centroids) {
  if (count == 0 || window_length == 0) throw DomainError("collapse_monitor: empty probe set");
  std::mt19937_64 rng(seed);
  return collapse_report(generate(net, sample_latent(rng, count, window_length, net.latent_dim)), centroids);
}

}  // namespace mimgan
