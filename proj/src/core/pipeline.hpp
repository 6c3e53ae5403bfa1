#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/detect.hpp"
#include "core/eval.hpp"

namespace mimgan::pipeline {

struct TrainOutcome {
  std::string checkpoint;
  std::string metrics_log;
  std::string config_echo;
  std::uint64_t epochs = 0;
  std::uint64_t steps = 0;
  std::size_t checkpoints_written = 0;
  bool stopped_early = false;
  double final_rolling_d_loss = 0.0;
};

/// Reads the training CSV, fits normalization, trains and writes into
/// `out`: config.effective, metrics.csv and the checkpoint (rewritten every
/// checkpoint_every epochs and after the last epoch). With `resume`, training
/// continues from that checkpoint's state and normalization.
///
/// A non-finite loss writes the pre-step state to <out>/diverged.ckpt and
/// rethrows as NumericError naming that path.
TrainOutcome run_train(const ResolvedConfig& resolved, const std::string& resume = {});

struct DetectOutcome {
  std::string scores_path;
  std::string windows_path;
  std::string summary_path;
  std::string summary;
  detect::DireScores dire;
  detect::Labels labels;
  std::optional<eval::MetricReport> metrics;
};

/// Scores the CSV named by `data` with the model in the checkpoint. The
/// window length, network shape and normalization come from the checkpoint;
/// scoring settings (alpha, tau, inversion, dis_mode, detect_stride) come
/// from `resolved`. Writes scores.csv, window_scores.csv and summary.txt.
DetectOutcome run_detect(const ResolvedConfig& resolved);

/// Writes the synthetic series (variables plus a `label` column) to `path`.
data::SynthResult run_synth(const data::SynthSpec& spec, std::uint64_t seed, const std::string& path);

struct EvalOutcome {
  eval::MetricReport metrics;
  std::string report;
};

/// Point-wise metrics between the `label_column` columns of two CSV files
/// of equal length.
EvalOutcome run_eval(const std::string& predictions, const std::string& truth,
                     const std::string& label_column = "label");

}  // namespace mimgan::pipeline
