#include "core/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "core/error.hpp"
#include "core/io.hpp"
#include "core/ops.hpp"
#include "core/train.hpp"

namespace mimgan::detect {

std::string to_string(DisMode mode) { return mode == DisMode::kRaw ? "raw" : "sigmoid_negated"; }

DisMode parse_dis_mode(const std::string& name) {
  if (name == "raw") return DisMode::kRaw;
  if (name == "sigmoid_negated" || name == "sigmoid") return DisMode::kSigmoidNegated;
  throw ConfigError("unknown dis_mode '" + name + "' (expected raw or sigmoid_negated)");
}

void ScoreConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1) so that both weights stay positive, got " + io::format_double(alpha));
  }
  if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
  if (!(inversion_lr >= 0.0) || !std::isfinite(inversion_lr)) throw ConfigError("inversion_lr must be >= 0");
  if (inversion_restarts == 0) throw ConfigError("inversion_restarts must be at least 1");
}

double simi(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("simi: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("simi: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::uint64_t window_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

struct RunResult {
  std::vector<double> best_err;
  std::vector<std::size_t> best_iter;
  std::vector<std::vector<double>> trace;
  Tensor best_z;
};

// Adam on the latent stack; every iterate, including the start, is scored.
RunResult run_inversion(const GeneratorNet& g, const Tensor& x_flat, const Tensor& x_norm, Tensor z,
                        const ScoreConfig& cfg) {
  const std::size_t batch = z.dim(0);
  const std::size_t per_window = z.size() / batch;
  RunResult r;
  r.best_err.assign(batch, std::numeric_limits<double>::infinity());
  r.best_iter.assign(batch, 0);
  r.trace.resize(batch);
  r.best_z = z;
  std::vector<double> m(z.size(), 0.0), v(z.size(), 0.0);
  const AdamWSettings adam{cfg.inversion_lr, 0.0, 0.9, 0.999, 1e-8};

  for (std::size_t it = 0;; ++it) {
    Graph gr;
    Var zv = gr.variable(z);
    Var y = op::reshape(generator_forward(gr, g, zv), x_flat.shape());
    Var dot = op::row_sum(gr.input(x_flat) * y);
    Var norm_y = op::sqrt(op::row_sum(op::square(y)));
    Var err = 1.0 - dot / (norm_y * gr.input(x_norm));

    auto e = err.value().data();
    for (std::size_t b = 0; b < batch; ++b) {
      if (!std::isfinite(e[b])) {
        std::ostringstream os;
        os << "latent inversion produced a non-finite error for window " << b << " at iteration " << it << "; z =";
        for (std::size_t k = 0; k < std::min<std::size_t>(per_window, 8); ++k) os << ' ' << z[b * per_window + k];
        if (per_window > 8) os << " ...";
        throw NumericError(os.str());
      }
      const double clamped = std::clamp(e[b], 0.0, 2.0);
      r.trace[b].push_back(clamped);
      if (clamped < r.best_err[b]) {
        r.best_err[b] = clamped;
        r.best_iter[b] = it;
        std::copy_n(z.data().begin() + static_cast<std::ptrdiff_t>(b * per_window), per_window,
                    r.best_z.mutable_data().begin() + static_cast<std::ptrdiff_t>(b * per_window));
      }
    }
    if (it == cfg.inversion_iters) break;
    gr.backward(op::sum(err));
    adamw_step(z.mutable_data(), gr.grad(zv), m, v, it + 1, adam);
  }
  return r;
}

void check_windows(const GeneratorNet& g, const Tensor& windows) {
  if (windows.rank() != 3 || windows.dim(2) != g.features) {
    throw ShapeError("inversion: windows " + shape_to_string(windows.shape()) + " do not match generator with " +
                     std::to_string(g.features) + " outputs");
  }
}

// (B x S*n) values and (B) norms; zero-norm windows are rejected.
std::pair<Tensor, Tensor> flatten(const Tensor& windows) {
  const std::size_t batch = windows.dim(0), cells = windows.dim(1) * windows.dim(2);
  Tensor flat = windows.reshaped({batch, cells});
  Tensor norms({batch});
  for (std::size_t b = 0; b < batch; ++b) {
    double s = 0.0;
    for (std::size_t c = 0; c < cells; ++c) s += flat[b * cells + c] * flat[b * cells + c];
    if (s == 0.0) throw DomainError("inversion: window " + std::to_string(b) + " has zero norm");
    norms.mutable_data()[b] = std::sqrt(s);
  }
  return {std::move(flat), std::move(norms)};
}

LatentCode extract(const RunResult& r, std::size_t b, std::size_t steps, std::size_t latent, std::size_t restart) {
  const std::size_t per_window = steps * latent;
  auto first = r.best_z.data().begin() + static_cast<std::ptrdiff_t>(b * per_window);
  LatentCode code;
  code.z = Tensor({steps, latent}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per_window)));
  code.err = r.best_err[b];
  code.iterations = r.best_iter[b];
  code.restart = restart;
  code.err_trace = r.trace[b];
  return code;
}

}  // namespace

std::vector<LatentCode> invert_batch(const GeneratorNet& g, const Tensor& windows,
                                     std::span<const std::uint64_t> seeds, const ScoreConfig& config) {
  config.validate();
  check_windows(g, windows);
  const std::size_t batch = windows.dim(0), steps = windows.dim(1);
  if (seeds.size() != batch) throw ShapeError("invert_batch: one seed per window required");
  const auto [flat, norms] = flatten(windows);

  std::vector<LatentCode> best(batch);
  for (LatentCode& c : best) c.err = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < config.inversion_restarts; ++r) {
    Tensor z0({batch, steps, g.latent_dim});
    const std::size_t per_window = steps * g.latent_dim;
    for (std::size_t b = 0; b < batch; ++b) {
      std::mt19937_64 rng(window_seed(seeds[b], r));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t k = 0; k < per_window; ++k) z0.mutable_data()[b * per_window + k] = normal(rng);
    }
    const RunResult run = run_inversion(g, flat, norms, std::move(z0), config);
    for (std::size_t b = 0; b < batch; ++b) {
      if (run.best_err[b] < best[b].err) best[b] = extract(run, b, steps, g.latent_dim, r);
    }
  }
  return best;
}

LatentCode invert_latent(const GeneratorNet& g, const Tensor& window, const ScoreConfig& config,
                         std::uint64_t seed) {
  if (window.rank() != 2) throw ShapeError("invert_latent: expected an (S x n) window, got " +
                                           shape_to_string(window.shape()));
  const std::uint64_t seeds[] = {seed};
  return invert_batch(g, window.reshaped({1, window.dim(0), window.dim(1)}), seeds, config).front();
}

LatentCode invert_latent_from(const GeneratorNet& g, const Tensor& window, const Tensor& z0,
                              const ScoreConfig& config) {
  config.validate();
  if (window.rank() != 2) throw ShapeError("invert_latent: expected an (S x n) window, got " +
                                           shape_to_string(window.shape()));
  const std::size_t steps = window.dim(0);
  if (z0.shape() != Shape{steps, g.latent_dim}) {
    throw ShapeError("invert_latent: starting code " + shape_to_string(z0.shape()) + " should be " +
                     shape_to_string({steps, g.latent_dim}));
  }
  const Tensor stacked = window.reshaped({1, steps, window.dim(1)});
  check_windows(g, stacked);
  const auto [flat, norms] = flatten(stacked);
  const RunResult run = run_inversion(g, flat, norms, z0.reshaped({1, steps, g.latent_dim}), config);
  return extract(run, 0, steps, g.latent_dim, 0);
}

double rec_score(std::span<const double> window, std::span<const double> reconstruction) {
  if (window.size() != reconstruction.size()) {
    throw ShapeError("rec_score: " + std::to_string(window.size()) + " cells vs " +
                     std::to_string(reconstruction.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) s += std::abs(window[i] - reconstruction[i]);
  return s;
}

double rec_score(const Tensor& window, const Tensor& reconstruction) {
  if (window.shape() != reconstruction.shape()) {
    throw ShapeError("rec_score: shapes " + shape_to_string(window.shape()) + " and " +
                     shape_to_string(reconstruction.shape()) + " differ");
  }
  return rec_score(window.data(), reconstruction.data());
}

double dis_score(double d_raw, DisMode mode) {
  if (mode == DisMode::kRaw) return d_raw;
  // sigmoid(-d), evaluated on the branch that cannot overflow
  if (d_raw >= 0.0) {
    const double e = std::exp(-d_raw);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d_raw));
}

double dis_score(const DiscriminatorNet& d, const Tensor& window, DisMode mode) {
  if (window.rank() != 2) throw ShapeError("dis_score: expected an (S x n) window, got " +
                                           shape_to_string(window.shape()));
  return dis_score(discriminate(d, window.reshaped({1, window.dim(0), window.dim(1)})).front(), mode);
}

double ad_loss(double rec, double dis, std::size_t cells, const ScoreConfig& config) {
  if (cells == 0) throw DomainError("ad_loss: window has no cells");
  return config.alpha * rec / static_cast<double>(cells) + config.beta() * dis;
}

WindowScores score_windows(const NetworkParams& params, const data::WindowSet& windows, const ScoreConfig& config,
                           std::size_t chunk) {
  config.validate();
  if (windows.count() == 0) throw DomainError("score_windows: empty window set");
  if (chunk == 0) chunk = windows.count();
  const std::size_t cells = windows.window_length * windows.features;
  WindowScores out;
  for (std::size_t begin = 0; begin < windows.count(); begin += chunk) {
    const std::size_t end = std::min(windows.count(), begin + chunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    std::vector<std::uint64_t> seeds;
    for (std::size_t j : idx) seeds.push_back(window_seed(config.seed, j));

    const Tensor batch = windows.gather(idx);
    const std::vector<LatentCode> codes = invert_batch(params.generator, batch, seeds, config);
    std::vector<double> zs;
    for (const LatentCode& c : codes) zs.insert(zs.end(), c.z.data().begin(), c.z.data().end());
    const Tensor recon = generate(
        params.generator, Tensor({idx.size(), windows.window_length, params.generator.latent_dim}, std::move(zs)));
    const std::vector<double> d_raw = discriminate(params.discriminator, batch);

    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double rec = rec_score(batch.data().subspan(k * cells, cells), recon.data().subspan(k * cells, cells));
      const double dis = dis_score(d_raw[k], config.dis_mode);
      out.err.push_back(codes[k].err);
      out.rec.push_back(rec);
      out.d_raw.push_back(d_raw[k]);
      out.dis.push_back(dis);
      out.ad_loss.push_back(ad_loss(rec, dis, cells, config));
    }
  }
  return out;
}

std::size_t DireScores::covered_count() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

DireScores dire_score(std::span<const double> window_losses, const data::WindowSet& windows) {
  if (windows.count() == 0) throw DomainError("dire_score: empty window set");
  if (window_losses.size() != windows.count()) {
    throw ShapeError("dire_score: " + std::to_string(window_losses.size()) + " losses for " +
                     std::to_string(windows.count()) + " windows");
  }
  DireScores d;
  d.values.assign(windows.series_length, 0.0);
  d.counts.assign(windows.series_length, 0);
  for (std::size_t j = 0; j < windows.count(); ++j) {
    for (std::size_t s = 0; s < windows.window_length; ++s) {
      const std::size_t t = windows.origins[j] + s;
      d.values[t] += window_losses[j];
      ++d.counts[t];
    }
  }
  for (std::size_t t = 0; t < d.values.size(); ++t) {
    if (d.counts[t] > 0) d.values[t] /= static_cast<double>(d.counts[t]);
  }
  return d;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

Labels label(const DireScores& scores, double tau) {
  std::vector<double> covered;
  for (std::size_t t = 0; t < scores.values.size(); ++t) {
    if (!std::isfinite(scores.values[t])) throw DomainError("label: non-finite score at t=" + std::to_string(t));
    if (scores.covered(t)) covered.push_back(scores.values[t]);
  }
  if (covered.empty()) throw DomainError("label: no timestep is covered by a window");

  Labels out;
  out.scale = median(covered);
  if (out.scale <= 0.0) {
    // A zero median (at least half the series reconstructs perfectly) falls
    // back to the mean so the ratio stays finite.
    out.scale = std::accumulate(covered.begin(), covered.end(), 0.0) / static_cast<double>(covered.size());
  }
  const std::size_t length = scores.values.size();
  out.ratio.assign(length, 0.0);
  out.p_hat.assign(length, 1.0);
  out.labels.assign(length, 0);
  for (std::size_t t = 0; t < length; ++t) {
    if (!scores.covered(t)) continue;
    out.ratio[t] = out.scale > 0.0 ? scores.values[t] / out.scale : 0.0;
    out.p_hat[t] = std::exp(-out.ratio[t]);
    out.labels[t] = out.ratio[t] > tau ? 1 : 0;
  }
  return out;
}

}  // namespace mimgan::detect
