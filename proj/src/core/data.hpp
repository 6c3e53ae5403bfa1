#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mimgan::data {

/// T x n multivariate series, row-major (one timestep per row), with optional
/// ground-truth anomaly labels used only for evaluation.
struct TimeSeries {
  std::size_t length = 0;  // T
  std::size_t width = 0;   // n
  std::vector<double> values;
  std::vector<std::string> names;
  std::optional<std::vector<int>> labels;

  double at(std::size_t t, std::size_t var) const { return values[t * width + var]; }
  double& at(std::size_t t, std::size_t var) { return values[t * width + var]; }
  /// Throws DomainError when a structural invariant does not hold.
  void validate() const;
  /// Rows [begin, end) as a new series (labels sliced alongside).
  TimeSeries rows(std::size_t begin, std::size_t end) const;
};

struct CsvSchema {
  /// Column holding 0/1 labels; dropped from the variables when present.
  std::optional<std::string> label_column;
  /// Variables to keep, in this order. Empty keeps every non-label column.
  std::vector<std::string> columns;
};

/// Header row, comma separated, one timestep per row. Errors name the
/// offending line and column.
TimeSeries ingest_csv(const std::string& path, const CsvSchema& schema = {});
TimeSeries parse_csv(std::string_view text, const CsvSchema& schema = {},
                     const std::string& origin = "<csv>");
/// Labels, when present, go to a trailing "label" column.
std::string format_csv(const TimeSeries& ts);
void write_csv(const TimeSeries& ts, const std::string& path);

/// Per-variable min/max of the training split.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
};

NormStats fit_norm(const TimeSeries& train);
/// Maps each variable affinely so the training min goes to -1 and the max to
/// +1. Values outside the training range are preserved, not clipped.
/// Variables with max == min map to 0.
TimeSeries normalize(const TimeSeries& ts, const NormStats& stats);
TimeSeries denormalize(const TimeSeries& ts, const NormStats& stats);

/// Sliding-window view of a series. Window j, offset s covers timestep
/// origins[j] + s.
struct WindowSet {
  std::size_t window_length = 0;  // S_w
  std::size_t stride = 1;
  std::size_t features = 0;
  std::size_t series_length = 0;
  std::vector<std::size_t> origins;
  Tensor windows;  // (m x S_w x n)

  std::size_t count() const noexcept { return origins.size(); }
  /// One window as an (S_w x n) tensor.
  Tensor window(std::size_t j) const;
  /// Selected windows stacked into (k x S_w x n).
  Tensor gather(std::span<const std::size_t> indices) const;
};

/// m = floor((T - S_w) / stride) + 1 windows; a trailing remainder shorter
/// than S_w is dropped.
WindowSet make_windows(const TimeSeries& ts, std::size_t window_length, std::size_t stride);

enum class AnomalyKind { kSpike, kLevelShift, kCorrelationBreak };

std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(const std::string& name);

struct AnomalyEvent {
  AnomalyKind kind = AnomalyKind::kSpike;
  std::size_t start = 0;
  std::size_t length = 1;
  std::vector<std::size_t> variables;
  double magnitude = 0.0;  // in units of the variable's standard deviation
};

/// Desk-scale generator. Normal regime: sinusoids sharing one period with
/// fixed per-variable phase offsets (so the variables are correlated), a
/// slower common component, and AR(1) noise. The deterministic part depends
/// on these fields only; the seed drives noise and anomaly placement.
struct SynthSpec {
  std::size_t features = 5;    // n
  std::size_t length = 5000;   // T
  double contamination = 0.05; // fraction of labeled timesteps, in [0, 0.5]
  std::vector<AnomalyKind> kinds{AnomalyKind::kSpike, AnomalyKind::kLevelShift};
  std::uint64_t seed = 1;

  double period = 40.0;
  double ar_coef = 0.7;
  double noise_sigma = 0.1;
  double spike_sigma = 10.0;
  double shift_sigma = 4.0;
  std::size_t max_spike_width = 3;
  std::size_t min_segment = 30;
  std::size_t max_segment = 80;

  void validate() const;
  std::map<std::string, std::string> to_kv() const;
  /// Recognized keys: n, T, contamination, anomaly_kinds, seed, period,
  /// ar_coef, noise_sigma, spike_sigma, shift_sigma, max_spike_width,
  /// min_segment, max_segment. Unknown keys throw ConfigError.
  static SynthSpec from_kv(const std::map<std::string, std::string>& kv);
};

struct SynthResult {
  TimeSeries series;
  std::vector<AnomalyEvent> events;
  std::vector<double> sigma;  // per-variable std of the anomaly-free signal
};

SynthResult synth_dataset(const SynthSpec& spec, std::uint64_t seed);

/// Adds one event to `ts` and marks its timesteps in the labels (creating
/// them if absent). `sigma` scales spike and shift magnitudes.
void inject_anomaly(TimeSeries& ts, const AnomalyEvent& event, std::span<const double> sigma,
                    const SynthSpec& spec);

}  // namespace mimgan::data
