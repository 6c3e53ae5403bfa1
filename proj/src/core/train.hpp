#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/error.hpp"
#include "core/networks.hpp"

namespace mimgan {

enum class LossKind { kMim, kLog };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 512;
  double lr_d = 0.0005;
  double lr_g = 0.0005;
  std::size_t d_steps_per_g_step = 1;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t checkpoint_every = 1;  // epochs; 0 disables periodic checkpoints
  LossKind loss = LossKind::kMim;
  double score_clamp = 30.0;

  // Stop once the rolling d_loss mean sits within `stop_tolerance` (relative)
  // of the equilibrium value for `stop_patience` consecutive epochs.
  bool early_stop = true;
  std::size_t rolling_window = 20;  // steps
  double stop_tolerance = 0.05;
  std::size_t stop_patience = 10;

  /// Learning rates may be zero (a frozen network); negative or non-finite
  /// values and zero-sized budgets throw ConfigError.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamWSettings {
  double lr = 0.0005;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update: decoupled decay p -= lr * wd * p, then the
/// bias-corrected moment step. `step` is the 1-based update count.
void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                std::span<double> v, std::uint64_t step, const AdamWSettings& s);

/// params -= lr * grads
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

/// First and second moments per generator tensor, in named_tensors order.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

struct StepRecord {
  std::uint64_t step = 0;
  double d_loss = 0.0;
  double g_objective = 0.0;
  std::size_t clamp_events = 0;
};

struct TrainState {
  NetworkParams params;
  AdamState g_opt;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::vector<StepRecord> history;
  std::vector<double> epoch_rolling;  // rolling d_loss mean after each epoch
  std::size_t band_streak = 0;
  bool stopped_early = false;
  std::mt19937_64 rng;

  /// Throws DomainError if moments and parameters disagree in shape or the
  /// history length differs from the step counter.
  void validate() const;
};

TrainState init_train_state(const NetConfig& net, const TrainConfig& config);

/// Raised when a loss or score turns non-finite. Carries the state as it was
/// before the failing step.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::shared_ptr<const TrainState> snapshot)
      : NumericError(what), snapshot_(std::move(snapshot)) {}
  const TrainState& snapshot() const { return *snapshot_; }

 private:
  std::shared_ptr<const TrainState> snapshot_;
};

using StepHook = std::function<void(const TrainState&, const StepRecord&)>;
using EpochHook = std::function<void(const TrainState&)>;

/// One pass over a shuffled copy of the windows. Per minibatch:
/// d_steps_per_g_step discriminator descents with fresh latents, then one
/// generator update with fresh latents.
void train_epoch(TrainState& state, const data::WindowSet& windows, const TrainConfig& config,
                 const StepHook& on_step = {});

/// Runs epochs until the cap or the early-stop rule fires. `on_epoch` runs
/// after the stop bookkeeping of each epoch.
void train(TrainState& state, const data::WindowSet& windows, const TrainConfig& config,
           const StepHook& on_step = {}, const EpochHook& on_epoch = {});

/// Mean d_loss of the last `window` history entries (all if fewer).
double rolling_d_loss(const TrainState& state, std::size_t window);

struct CollapseReport {
  std::vector<double> per_variable_std;
  double mean_pairwise_distance = 0.0;
  double min_pairwise_distance = 0.0;
  /// Generated windows are (near) identical.
  bool collapsed = false;
  /// Fraction of windows nearest each centroid; empty without centroids.
  std::vector<double> mode_coverage;
  double min_mode_coverage = 0.0;
  /// Some mode received less than the coverage floor.
  bool mode_dropped = false;
};

/// Diagnostics over generated windows (m x S x n). Centroids, when given,
/// are (S x n) each and assignment is nearest in flattened L2.
CollapseReport collapse_report(const Tensor& generated, std::span<const Tensor> centroids = {},
                               double distance_floor = 1e-6, double coverage_floor = 0.10);

/// Draws `count` windows of length `window_length` from the generator with
/// the given seed and reports on them.
CollapseReport collapse_monitor(const GeneratorNet& net, std::size_t count, std::size_t window_length,
                                std::uint64_t seed, std::span<const Tensor> centroids = {});

/// Standard-normal latents (m x S x latent_dim).
Tensor sample_latent(std::mt19937_64& rng, std::size_t m, std::size_t window_length, std::size_t latent_dim);

}  // namespace mimgan
