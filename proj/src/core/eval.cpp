#include "core/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "core/error.hpp"
#include "core/io.hpp"
#include "core/loss.hpp"

namespace mimgan::eval {

MetricReport metrics_from_counts(const ConfusionCounts& c) {
  MetricReport r;
  r.counts = c;
  if (c.tp + c.fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1_undefined = true;
  }
  if (c.fp + c.tn > 0) r.false_positive_rate = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return r;
}

MetricReport metrics(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("metrics: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] != 0 && pred[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      throw DomainError("metrics: labels must be 0 or 1");
    }
    if (pred[i] && truth[i]) ++c.tp;
    else if (pred[i]) ++c.fp;
    else if (truth[i]) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

SweepResult threshold_sweep(const detect::DireScores& scores, std::span<const int> truth,
                            std::span<const double> grid) {
  if (grid.empty()) throw DomainError("threshold_sweep: empty grid");
  SweepResult r;
  r.grid.assign(grid.begin(), grid.end());
  std::sort(r.grid.begin(), r.grid.end());
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const MetricReport m = metrics(detect::label(scores, r.grid[i]).labels, truth);
    r.f1.push_back(m.f1);
    if (i == 0 || m.f1 > r.best_f1) {
      r.best_f1 = m.f1;
      r.best_tau = r.grid[i];
      r.best = m;
    }
  }
  return r;
}

std::vector<double> ratio_grid(const detect::DireScores& scores, std::size_t count) {
  const detect::Labels l = detect::label(scores, 0.0);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t t = 0; t < l.ratio.size(); ++t) {
    if (!scores.covered(t) || !(l.ratio[t] > 0.0)) continue;
    lo = std::min(lo, l.ratio[t]);
    hi = std::max(hi, l.ratio[t]);
  }
  if (!(hi > 0.0) || count < 2) return {1.0};
  // Start just below the smallest ratio so "everything positive" is on the grid.
  lo *= 0.999;
  std::vector<double> grid;
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid.push_back(lo * std::exp(step * static_cast<double>(i)));
  return grid;
}

// ---------------------------------------------------------------------------

CollapseConfig::CollapseConfig() {
  net.features = 1;
  net.latent_dim = 4;
  net.g_hidden = 16;
  net.d_hidden = 16;
  train.epochs = 300;
  train.batch_size = 64;
  train.lr_d = 0.005;
  train.lr_g = 0.002;
  train.early_stop = false;
}

data::WindowSet bimodal_windows(const CollapseConfig& config, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw DomainError("bimodal_windows: no windows requested");
  const std::size_t steps = config.window_length, n = config.net.features;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, config.noise);
  data::WindowSet w;
  w.window_length = steps;
  w.stride = steps;
  w.features = n;
  w.series_length = count * steps;
  w.windows = Tensor({count, steps, n});
  auto out = w.windows.mutable_data();
  for (std::size_t i = 0; i < count; ++i) {
    w.origins.push_back(i * steps);
    const double level = i % 2 == 0 ? config.mode_level : -config.mode_level;
    for (std::size_t c = 0; c < steps * n; ++c) out[i * steps * n + c] = level + noise(rng);
  }
  return w;
}

std::vector<Tensor> mode_centroids(const CollapseConfig& config) {
  const Shape s{config.window_length, config.net.features};
  return {Tensor::filled(s, config.mode_level), Tensor::filled(s, -config.mode_level)};
}

std::vector<double> window_mean_histogram(const Tensor& windows, std::size_t bins) {
  if (windows.rank() != 3 || bins == 0) throw DomainError("window_mean_histogram: expected (m x S x n) and bins > 0");
  const std::size_t m = windows.dim(0), cells = windows.dim(1) * windows.dim(2);
  std::vector<double> h(bins, 0.5);  // add-half smoothing keeps supports overlapping
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cells; ++c) mean += windows[i * cells + c];
    mean /= static_cast<double>(cells);
    const double u = std::clamp((mean + 1.0) / 2.0, 0.0, 1.0);
    h[std::min(bins - 1, static_cast<std::size_t>(u * static_cast<double>(bins)))] += 1.0;
  }
  const double total = static_cast<double>(m) + 0.5 * static_cast<double>(bins);
  for (double& v : h) v /= total;
  return h;
}

CollapseArm collapse_arm(const CollapseConfig& config, LossKind loss, std::uint64_t seed) {
  const data::WindowSet target = bimodal_windows(config, config.windows, config.data_seed);
  TrainConfig tc = config.train;
  tc.loss = loss;
  tc.seed = seed;
  TrainState state = init_train_state(config.net, tc);
  train(state, target, tc);

  std::mt19937_64 rng(config.probe_seed);
  const Tensor generated = generate(state.params.generator,
                                    sample_latent(rng, config.probe, config.window_length, config.net.latent_dim));
  const std::vector<Tensor> centroids = mode_centroids(config);
  const CollapseReport report = collapse_report(generated, centroids);
  const data::WindowSet reference = bimodal_windows(config, config.probe, config.data_seed + 1);

  CollapseArm arm;
  arm.loss = loss;
  arm.seed = seed;
  arm.coverage = report.mode_coverage;
  arm.min_coverage = report.min_mode_coverage;
  arm.mode_dropped = report.mode_dropped;
  arm.collapsed = report.collapsed;
  arm.renyi = loss::renyi_half_divergence(window_mean_histogram(generated, config.bins),
                                          window_mean_histogram(reference.windows, config.bins));
  return arm;
}

CollapseComparison collapse_experiment(const CollapseConfig& config, std::span<const std::uint64_t> seeds) {
  CollapseComparison c;
  TrainConfig mim = config.train, log = config.train;
  mim.loss = LossKind::kMim;
  log.loss = LossKind::kLog;
  c.config_diff = kv_diff(to_kv(mim), to_kv(log));
  for (std::uint64_t s : seeds) {
    c.mim.push_back(collapse_arm(config, LossKind::kMim, s));
    c.log.push_back(collapse_arm(config, LossKind::kLog, s));
    c.mim_covered += c.mim.back().min_coverage >= 0.10 ? 1 : 0;
    c.log_covered += c.log.back().min_coverage >= 0.10 ? 1 : 0;
  }
  return c;
}

std::string format_collapse(const CollapseComparison& c) {
  std::ostringstream os;
  os << "experiment: mode_coverage\n";
  os << "config_diff:";
  for (const std::string& k : c.config_diff) os << ' ' << k;
  os << "\nmim_seeds_covering_both_modes: " << c.mim_covered << '/' << c.mim.size() << '\n';
  os << "log_seeds_covering_both_modes: " << c.log_covered << '/' << c.log.size() << '\n';
  os << "# loss seed coverage_a coverage_b min_coverage renyi_half collapsed\n";
  for (const auto* arms : {&c.mim, &c.log}) {
    for (const CollapseArm& a : *arms) {
      os << to_string(a.loss) << ' ' << a.seed << ' ' << io::format_double(a.coverage.at(0)) << ' '
         << io::format_double(a.coverage.at(1)) << ' ' << io::format_double(a.min_coverage) << ' '
         << io::format_double(a.renyi) << ' ' << (a.collapsed ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------

E2EConfig::E2EConfig() {
  run.seq_length = 30;
  run.train_stride = 10;
  run.detect_stride = 3;
  run.net.features = data.features;
  run.net.latent_dim = 8;
  run.net.g_hidden = 32;
  run.net.d_hidden = 32;
  run.train.epochs = 100;
  run.train.batch_size = 64;
  run.train.lr_d = 0.01;
  run.train.lr_g = 0.002;
  run.train.early_stop = false;
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ShapeError& e) {
    throw ShapeError(std::string(name) + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(std::string(name) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(name) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string(name) + ": " + e.what());
  } catch (const VersionError& e) {
    throw VersionError(std::string(name) + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

E2EReport e2e_experiment(const E2EConfig& config, std::uint64_t seed) {
  E2EReport r;
  r.seed = seed;
  RunConfig run = config.run;
  run.seed = seed;
  run.net.features = config.data.features;
  r.config = run.to_kv();
  for (const auto& [k, v] : config.data.to_kv()) r.config["synth." + k] = v;

  auto [test, train_series] = stage("data", [&] {
    run.validate();
    data::SynthSpec clean = config.data;
    clean.contamination = 0.0;
    return std::pair{data::synth_dataset(config.data, seed),
                     data::synth_dataset(clean, seed + config.train_seed_offset).series};
  });
  const auto [train_norm, test_norm] = stage("normalize", [&] {
    const data::NormStats stats = data::fit_norm(train_series);
    return std::pair{data::normalize(train_series, stats), data::normalize(test.series, stats)};
  });

  auto t0 = std::chrono::steady_clock::now();
  const TrainState state = stage("train", [&] {
    const data::WindowSet windows = data::make_windows(train_norm, run.seq_length, run.effective_train_stride());
    TrainState s = init_train_state(run.net, run.train_config());
    train(s, windows, run.train_config());
    return s;
  });
  r.train_seconds = seconds_since(t0);
  for (const StepRecord& s : state.history) r.d_loss_history.push_back(s.d_loss);

  t0 = std::chrono::steady_clock::now();
  stage("detect", [&] {
    const data::WindowSet windows = data::make_windows(test_norm, run.seq_length, run.detect_stride);
    r.windows = detect::score_windows(state.params, windows, run.score_config(), run.score_chunk);
    r.dire = detect::dire_score(r.windows.ad_loss, windows);
  });
  r.detect_seconds = seconds_since(t0);

  stage("evaluate", [&] {
    const std::vector<int>& truth = *test.series.labels;
    r.at_tau = metrics(detect::label(r.dire, run.score.tau).labels, truth);
    r.sweep = threshold_sweep(r.dire, truth, ratio_grid(r.dire, config.tau_grid_size));
  });
  return r;
}

detect::DireScores oracle_scores(const data::SynthResult& synth) {
  const std::size_t length = synth.series.length;
  detect::DireScores d;
  d.values.assign(length, 0.0);
  d.counts.assign(length, 1);
  for (const data::AnomalyEvent& e : synth.events) {
    const double size = e.kind == data::AnomalyKind::kCorrelationBreak ? 1.0 : std::abs(e.magnitude);
    for (std::size_t t = e.start; t < e.start + e.length; ++t) d.values[t] = std::max(d.values[t], size);
  }
  return d;
}

std::string reference_block() {
  return "reference_result: MIM-GAN*** on KDDCUP99 (published full-scale benchmark)\n"
         "reference_precision: 95.81\n"
         "reference_recall: 86.71\n"
         "reference_f1: 0.91\n"
         "reference_note: NOT REPRODUCED. The full KDDCUP99 feature pipeline is not available at desk scale; "
         "the figures above are context only and are not comparable with the synthetic-data metrics in this "
         "report.\n";
}

std::string format_metrics(const MetricReport& m) {
  std::ostringstream os;
  os << "tp: " << m.counts.tp << "\nfp: " << m.counts.fp << "\nfn: " << m.counts.fn << "\ntn: " << m.counts.tn
     << '\n';
  os << "precision: " << io::format_double(m.precision) << (m.precision_undefined ? "  # undefined, reported as 0" : "")
     << '\n';
  os << "recall: " << io::format_double(m.recall) << (m.recall_undefined ? "  # undefined, reported as 0" : "") << '\n';
  os << "f1: " << io::format_double(m.f1) << (m.f1_undefined ? "  # undefined, reported as 0" : "") << '\n';
  os << "false_positive_rate: " << io::format_double(m.false_positive_rate) << '\n';
  return os.str();
}

std::string format_e2e(const E2EReport& r) {
  std::ostringstream os;
  os << "experiment: end_to_end_detection\n";
  os << "seed: " << r.seed << '\n';
  os << "train_seconds: " << io::format_double(r.train_seconds) << '\n';
  os << "detect_seconds: " << io::format_double(r.detect_seconds) << '\n';
  os << "best_tau: " << io::format_double(r.sweep.best_tau) << '\n';
  os << format_metrics(r.sweep.best);
  os << "configured_tau_f1: " << io::format_double(r.at_tau.f1) << '\n';
  os << reference_block();
  os << "# seed precision recall f1\n";
  os << r.seed << ' ' << io::format_double(r.sweep.best.precision) << ' ' << io::format_double(r.sweep.best.recall)
     << ' ' << io::format_double(r.sweep.best.f1) << '\n';
  os << "# config\n" << io::format_kv(r.config);
  return os.str();
}

}  // namespace mimgan::eval
