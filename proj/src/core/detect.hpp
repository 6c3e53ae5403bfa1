#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/networks.hpp"

namespace mimgan::detect {

/// How the discriminator output enters the anomaly loss.
enum class DisMode {
  kSigmoidNegated,  // sigmoid(-D), in (0, 1), larger = more anomalous
  kRaw,             // D as is
};

std::string to_string(DisMode mode);
DisMode parse_dis_mode(const std::string& name);

struct ScoreConfig {
  double alpha = 0.5;  // reconstruction weight; the discriminator weight is 1 - alpha
  double tau = 1.0;
  std::size_t inversion_iters = 50;
  double inversion_lr = 0.01;
  std::size_t inversion_restarts = 3;
  DisMode dis_mode = DisMode::kSigmoidNegated;
  std::uint64_t seed = 0;

  double beta() const noexcept { return 1.0 - alpha; }
  /// alpha must lie strictly inside (0, 1); tau finite; restarts >= 1.
  void validate() const;
};

/// Cosine similarity of two equal-length vectors. Throws DomainError on a
/// zero-norm operand, ShapeError on a length mismatch.
double simi(std::span<const double> a, std::span<const double> b);

struct LatentCode {
  Tensor z;                        // (S x latent_dim)
  double err = 0.0;                // 1 - simi, clamped to [0, 2]
  std::size_t iterations = 0;      // gradient steps taken on the winning restart
  std::size_t restart = 0;         // index of the winning restart
  std::vector<double> err_trace;   // Err of every evaluated iterate of the winning restart
};

/// Best latent code for one (S x n) window: `inversion_restarts` prior
/// draws, each refined by `inversion_iters` Adam steps on Err = 1 - simi.
/// The best iterate seen is returned, not the last one.
LatentCode invert_latent(const GeneratorNet& g, const Tensor& window, const ScoreConfig& config,
                         std::uint64_t seed);
/// Single run from a given starting code (S x latent_dim).
LatentCode invert_latent_from(const GeneratorNet& g, const Tensor& window, const Tensor& z0,
                              const ScoreConfig& config);

/// Inverts a stack of windows (B x S x n) jointly; window b uses seeds[b].
/// Identical per window to invert_latent with the same seed.
std::vector<LatentCode> invert_batch(const GeneratorNet& g, const Tensor& windows,
                                     std::span<const std::uint64_t> seeds, const ScoreConfig& config);

/// Sum of absolute residuals over every cell.
double rec_score(std::span<const double> window, std::span<const double> reconstruction);
double rec_score(const Tensor& window, const Tensor& reconstruction);

/// sigmoid(-d_raw) by default, or d_raw itself in raw mode.
double dis_score(double d_raw, DisMode mode = DisMode::kSigmoidNegated);
double dis_score(const DiscriminatorNet& d, const Tensor& window, DisMode mode = DisMode::kSigmoidNegated);

/// alpha * rec / cells + (1 - alpha) * dis
double ad_loss(double rec, double dis, std::size_t cells, const ScoreConfig& config);

/// Per-window seed derived from the global seed and the window index, so
/// results do not depend on evaluation order.
std::uint64_t window_seed(std::uint64_t seed, std::size_t index);

struct WindowScores {
  std::vector<double> err;
  std::vector<double> rec;
  std::vector<double> d_raw;
  std::vector<double> dis;
  std::vector<double> ad_loss;
};

/// Inversion, reconstruction and discrimination for every window, processed
/// in chunks of `chunk` windows.
WindowScores score_windows(const NetworkParams& params, const data::WindowSet& windows,
                           const ScoreConfig& config, std::size_t chunk = 256);

struct DireScores {
  std::vector<double> values;       // mean covering-window loss; 0 where uncovered
  std::vector<std::size_t> counts;  // number of covering windows
  bool covered(std::size_t t) const { return counts[t] > 0; }
  std::size_t covered_count() const;
};

/// Every timestep receives the mean loss of the windows covering it.
DireScores dire_score(std::span<const double> window_losses, const data::WindowSet& windows);

struct Labels {
  std::vector<double> ratio;   // DIRE / scale
  std::vector<double> p_hat;   // exp(-ratio)
  std::vector<int> labels;     // ratio > tau; uncovered timesteps get 0
  double scale = 0.0;          // median DIRE over covered timesteps
};

/// Labels from the ratio of each DIRE value to the median over covered
/// timesteps. Throws DomainError when nothing is covered.
Labels label(const DireScores& scores, double tau);

double median(std::vector<double> values);

}  // namespace mimgan::detect
