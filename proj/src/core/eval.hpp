#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/detect.hpp"
#include "core/train.hpp"

namespace mimgan::eval {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

/// Point-wise precision, recall and F1. A zero denominator yields 0 and sets
/// the matching flag instead of producing NaN.
struct MetricReport {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double false_positive_rate = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

MetricReport metrics_from_counts(const ConfusionCounts& counts);
/// Throws ShapeError on a length mismatch, DomainError on non-binary input.
MetricReport metrics(std::span<const int> pred, std::span<const int> truth);

struct SweepResult {
  std::vector<double> grid;
  std::vector<double> f1;
  double best_tau = 0.0;
  double best_f1 = 0.0;
  MetricReport best;
};

/// F1 for every threshold in `grid` applied to the DIRE ratio. Ties go to
/// the smaller threshold. Throws DomainError on an empty grid.
SweepResult threshold_sweep(const detect::DireScores& scores, std::span<const int> truth,
                            std::span<const double> grid);

/// `count` log-spaced thresholds spanning the observed positive ratios.
std::vector<double> ratio_grid(const detect::DireScores& scores, std::size_t count = 200);

// ---------------------------------------------------------------------------
// Mode-coverage comparison on a two-mode toy target.

struct CollapseConfig {
  NetConfig net;
  TrainConfig train;
  std::size_t window_length = 8;
  std::size_t windows = 512;
  double mode_level = 0.5;  // modes are constant windows at +level and -level
  double noise = 0.1;
  std::uint64_t data_seed = 11;
  std::size_t probe = 1000;
  std::uint64_t probe_seed = 5;
  std::size_t bins = 20;

  CollapseConfig();
};

/// Target windows alternate between the two modes, with Gaussian noise.
data::WindowSet bimodal_windows(const CollapseConfig& config, std::size_t count, std::uint64_t seed);
/// Constant (S x n) windows at +level and -level.
std::vector<Tensor> mode_centroids(const CollapseConfig& config);
/// Smoothed histogram of per-window means over [-1, 1].
std::vector<double> window_mean_histogram(const Tensor& windows, std::size_t bins);

struct CollapseArm {
  LossKind loss = LossKind::kMim;
  std::uint64_t seed = 0;
  std::vector<double> coverage;
  double min_coverage = 0.0;
  double renyi = 0.0;
  bool mode_dropped = false;
  bool collapsed = false;
};

struct CollapseComparison {
  std::vector<CollapseArm> mim;
  std::vector<CollapseArm> log;
  /// Keys whose values differ between the two arms' training configs.
  std::vector<std::string> config_diff;
  std::size_t mim_covered = 0;  // seeds with min coverage >= 0.10
  std::size_t log_covered = 0;
};

CollapseArm collapse_arm(const CollapseConfig& config, LossKind loss, std::uint64_t seed);
CollapseComparison collapse_experiment(const CollapseConfig& config, std::span<const std::uint64_t> seeds);
std::string format_collapse(const CollapseComparison& c);

// ---------------------------------------------------------------------------
// End-to-end detection: train on an anomaly-free series, score a
// contaminated one from the same regime, sweep the threshold.

struct E2EConfig {
  data::SynthSpec data;
  RunConfig run;
  std::size_t tau_grid_size = 200;
  std::uint64_t train_seed_offset = 1000;

  E2EConfig();
};

struct E2EReport {
  std::uint64_t seed = 0;
  KeyValues config;
  MetricReport at_tau;  // labels at the configured tau
  SweepResult sweep;
  detect::DireScores dire;
  detect::WindowScores windows;
  std::vector<double> d_loss_history;
  double train_seconds = 0.0;
  double detect_seconds = 0.0;
};

/// Any stage failure is rethrown with the stage name prepended.
E2EReport e2e_experiment(const E2EConfig& config, std::uint64_t seed);

/// Stand-in scorer: DIRE at t is the absolute injected magnitude (0 where
/// nothing was injected). Bounds what the threshold and metric plumbing can
/// achieve.
detect::DireScores oracle_scores(const data::SynthResult& synth);

/// Published reference numbers for the full-scale benchmark, quoted for
/// context only, followed by a statement that they are not reproduced here.
std::string reference_block();
std::string format_metrics(const MetricReport& m);
std::string format_e2e(const E2EReport& r);

}  // namespace mimgan::eval
