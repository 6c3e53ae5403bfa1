#include "core/pipeline.hpp"

#include <filesystem>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/io.hpp"
#include "core/train.hpp"

namespace mimgan::pipeline {
namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

data::TimeSeries read_series(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("data: no input file given");
  if (!fs::is_regular_file(c.data)) throw ConfigError("data: no such file '" + c.data + "'");
  data::CsvSchema schema;
  if (!c.label_column.empty()) schema.label_column = c.label_column;
  return data::ingest_csv(c.data, schema);
}

std::string metrics_csv(const TrainState& s) {
  std::string out = "step,d_loss,g_objective,clamp_events\n";
  for (const StepRecord& r : s.history) {
    out += std::to_string(r.step) + ',' + io::format_double(r.d_loss) + ',' + io::format_double(r.g_objective) +
           ',' + std::to_string(r.clamp_events) + '\n';
  }
  return out;
}

std::string format_flag(const std::vector<int>& v, std::size_t t) { return std::to_string(v[t]); }

}  // namespace

TrainOutcome run_train(const ResolvedConfig& resolved, const std::string& resume) {
  RunConfig run = resolved.config;
  const data::TimeSeries raw = read_series(run);

  // The feature count follows the data unless it was set explicitly.
  const auto origin = resolved.origin.find("features");
  const bool explicit_features = origin != resolved.origin.end() && origin->second != "default";
  if (explicit_features && run.net.features != raw.width) {
    throw ConfigError("features: configured " + std::to_string(run.net.features) + " but '" + run.data + "' has " +
                      std::to_string(raw.width) + " variable columns");
  }
  run.net.features = raw.width;
  run.validate();

  Checkpoint ckpt;
  if (resume.empty()) {
    ckpt.norm = data::fit_norm(raw);
    ckpt.state = init_train_state(run.net, run.train_config());
  } else {
    ckpt = load_checkpoint(resume);
    if (!(ckpt.state.params.config == run.net)) {
      throw ConfigError("resume: network shape in '" + resume + "' differs from the configured one");
    }
    if (!ckpt.norm) ckpt.norm = data::fit_norm(raw);
  }
  const data::WindowSet windows =
      data::make_windows(data::normalize(raw, *ckpt.norm), run.seq_length, run.effective_train_stride());

  ensure_dir(run.out);
  TrainOutcome outcome;
  outcome.checkpoint = run.effective_checkpoint();
  outcome.metrics_log = join(run.out, "metrics.csv");
  outcome.config_echo = join(run.out, "config.effective");
  ResolvedConfig echoed = resolved;
  echoed.config = run;
  io::atomic_write(outcome.config_echo, format_resolved(echoed));
  ckpt.config = run.to_kv();

  const TrainConfig tc = run.train_config();
  auto persist = [&](const TrainState& s) {
    ckpt.state = s;
    save_checkpoint(outcome.checkpoint, ckpt);
    io::atomic_write(outcome.metrics_log, metrics_csv(s));
    ++outcome.checkpoints_written;
  };

  TrainState state = std::move(ckpt.state);
  try {
    train(state, windows, tc, {}, [&](const TrainState& s) {
      const bool last = s.epoch >= tc.epochs || s.stopped_early;
      if (last || s.epoch % tc.checkpoint_every == 0) persist(s);
    });
  } catch (const TrainingDiverged& e) {
    const std::string path = join(run.out, "diverged.ckpt");
    ckpt.state = e.snapshot();
    save_checkpoint(path, ckpt);
    throw NumericError(std::string(e.what()) + "; state before the failing step saved to " + path);
  }
  // A resumed run that was already complete still leaves a fresh log.
  if (outcome.checkpoints_written == 0) persist(state);

  outcome.epochs = state.epoch;
  outcome.steps = state.step;
  outcome.stopped_early = state.stopped_early;
  outcome.final_rolling_d_loss = state.epoch_rolling.empty() ? 0.0 : state.epoch_rolling.back();
  return outcome;
}

DetectOutcome run_detect(const ResolvedConfig& resolved) {
  const RunConfig& run = resolved.config;
  const std::string path = run.effective_checkpoint();
  const Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.norm) throw IoError(path + ": checkpoint carries no normalization statistics");

  RunConfig trained;
  for (const auto& [k, v] : ckpt.config) trained.set(k, v);
  RunConfig scoring = run;
  scoring.seq_length = trained.seq_length;
  scoring.net = ckpt.state.params.config;
  scoring.validate();

  const data::TimeSeries raw = read_series(run);
  if (raw.width != scoring.net.features) {
    throw ConfigError("data: '" + run.data + "' has " + std::to_string(raw.width) + " variable columns, model expects " +
                      std::to_string(scoring.net.features));
  }
  if (ckpt.norm->min.size() != raw.width) throw IoError(path + ": normalization statistics do not match the model");
  const data::WindowSet windows =
      data::make_windows(data::normalize(raw, *ckpt.norm), scoring.seq_length, scoring.detect_stride);

  const detect::ScoreConfig sc = scoring.score_config();
  const detect::WindowScores ws = detect::score_windows(ckpt.state.params, windows, sc, scoring.score_chunk);

  DetectOutcome out;
  out.dire = detect::dire_score(ws.ad_loss, windows);
  out.labels = detect::label(out.dire, sc.tau);
  if (raw.labels) out.metrics = eval::metrics(out.labels.labels, *raw.labels);

  ensure_dir(run.out);
  out.scores_path = join(run.out, "scores.csv");
  out.windows_path = join(run.out, "window_scores.csv");
  out.summary_path = join(run.out, "summary.txt");

  std::string scores = "t,dire,p_hat,label\n";
  for (std::size_t t = 0; t < raw.length; ++t) {
    scores += std::to_string(t) + ',' + io::format_double(out.dire.values[t]) + ',' +
              io::format_double(out.labels.p_hat[t]) + ',' + format_flag(out.labels.labels, t) + '\n';
  }
  io::atomic_write(out.scores_path, scores);

  std::string per_window = "window,origin,err,rec,d_raw,dis,ad_loss\n";
  for (std::size_t j = 0; j < windows.count(); ++j) {
    per_window += std::to_string(j) + ',' + std::to_string(windows.origins[j]) + ',' + io::format_double(ws.err[j]) +
                  ',' + io::format_double(ws.rec[j]) + ',' + io::format_double(ws.d_raw[j]) + ',' +
                  io::format_double(ws.dis[j]) + ',' + io::format_double(ws.ad_loss[j]) + '\n';
  }
  io::atomic_write(out.windows_path, per_window);

  std::size_t flagged = 0;
  for (int l : out.labels.labels) flagged += static_cast<std::size_t>(l);
  const std::size_t covered = out.dire.covered_count();
  std::ostringstream os;
  os << "checkpoint: " << path << '\n'
     << "data: " << run.data << '\n'
     << "timesteps: " << raw.length << '\n'
     << "windows: " << windows.count() << '\n'
     << "seq_length: " << scoring.seq_length << '\n'
     << "detect_stride: " << scoring.detect_stride << '\n'
     << "covered_timesteps: " << covered << '\n'
     << "uncovered_timesteps: " << raw.length - covered << '\n'
     << "alpha: " << io::format_double(sc.alpha) << '\n'
     << "beta: " << io::format_display(sc.beta()) << '\n'
     << "tau: " << io::format_double(sc.tau) << '\n'
     << "dis_mode: " << detect::to_string(sc.dis_mode) << '\n'
     << "scale: " << io::format_double(out.labels.scale) << '\n'
     << "flagged: " << flagged << '\n'
     << "flagged_rate: " << io::format_double(static_cast<double>(flagged) / static_cast<double>(raw.length)) << '\n';
  if (run.seq_length != scoring.seq_length) {
    os << "notice: seq_length " << run.seq_length << " ignored, the model was trained with " << scoring.seq_length
       << '\n';
  }
  if (out.metrics) os << eval::format_metrics(*out.metrics) << eval::reference_block();
  out.summary = os.str();
  io::atomic_write(out.summary_path, out.summary);
  return out;
}

data::SynthResult run_synth(const data::SynthSpec& spec, std::uint64_t seed, const std::string& path) {
  spec.validate();
  data::SynthResult r = data::synth_dataset(spec, seed);
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  data::write_csv(r.series, path);
  return r;
}

namespace {

std::vector<int> read_labels(const std::string& path, const std::string& column) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const std::vector<std::string> header = io::split(io::trim(line), ',');
  std::size_t idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (io::trim(header[i]) == column) idx = i;
  }
  if (idx == header.size()) throw IoError(path + ": column '" + column + "' not found");

  std::vector<int> labels;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    line = io::trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = io::split(line, ',');
    if (cells.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(row) + ": expected " + std::to_string(header.size()) + " columns");
    }
    const std::string cell = io::trim(cells[idx]);
    if (cell == "0" || cell == "0.0") {
      labels.push_back(0);
    } else if (cell == "1" || cell == "1.0") {
      labels.push_back(1);
    } else {
      throw IoError(path + ":" + std::to_string(row) + ": label must be 0 or 1, got '" + cell + "'");
    }
  }
  return labels;
}

}  // namespace

EvalOutcome run_eval(const std::string& predictions, const std::string& truth, const std::string& label_column) {
  const std::vector<int> pred = read_labels(predictions, label_column);
  const std::vector<int> real = read_labels(truth, label_column);
  if (pred.size() != real.size()) {
    throw ShapeError("eval: " + predictions + " has " + std::to_string(pred.size()) + " rows, " + truth + " has " +
                     std::to_string(real.size()));
  }
  EvalOutcome out;
  out.metrics = eval::metrics(pred, real);
  out.report = "predictions: " + predictions + "\ntruth: " + truth + "\ntimesteps: " + std::to_string(pred.size()) +
               "\n" + eval::format_metrics(out.metrics) + eval::reference_block();
  return out;
}

}  // namespace mimgan::pipeline
