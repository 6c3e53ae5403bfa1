// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mimgan/mimgan.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int exit_code(mimgan_status s) {
  switch (s) {
    case MIMGAN_OK:
      return kExitOk;
    case MIMGAN_INVALID_ARGUMENT:
    case MIMGAN_CONFIG:
    case MIMGAN_VERSION:
      return kExitConfig;
    case MIMGAN_NUMERIC:
      return kExitNumeric;
    default:
      return kExitFailure;
  }
}

int report_failure(const char* command, mimgan_status s) {
  std::fprintf(stderr, "mimgan %s: %s: %s\n", command, mimgan_status_name(s), mimgan_last_error());
  return exit_code(s);
}

// Prints and frees a text handle.
void print(mimgan_text* text) {
  if (!text) return;
  std::fwrite(mimgan_text_data(text), 1, mimgan_text_size(text), stdout);
  mimgan_text_free(text);
}

struct ConfigHandle {
  mimgan_config* ptr = nullptr;
  ~ConfigHandle() { mimgan_config_free(ptr); }
};

// Options shared by train and detect; each maps onto one config key.
struct RunOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;
  bool print_config = false;

  void bind(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  }
};

// Builds the layered config: env, then file, then --set pairs, then named flags.
mimgan_status build_config(const RunOptions& o, ConfigHandle& h) {
  mimgan_status s = mimgan_config_create(&h.ptr);
  if (s == MIMGAN_OK) s = mimgan_config_apply_env(h.ptr);
  if (s == MIMGAN_OK && !o.config_file.empty()) {
    s = mimgan_config_load_file(h.ptr, o.config_file.c_str());
    // An unreadable config file is a usage problem, not a data problem.
    if (s == MIMGAN_IO) s = MIMGAN_CONFIG;
  }
  for (const std::string& kv : o.sets) {
    if (s != MIMGAN_OK) break;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
      return MIMGAN_INVALID_ARGUMENT;
    }
    s = mimgan_config_set(h.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  for (const auto& [k, v] : o.flags) {
    if (s != MIMGAN_OK) break;
    s = mimgan_config_set(h.ptr, k.c_str(), v.c_str());
  }
  return s;
}

void add_common(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_file, "key = value config file");
  o.bind(cmd, "--seed", "seed", "Run seed");
  o.bind(cmd, "--out", "out", "Output directory");
  o.bind(cmd, "--data", "data", "Input CSV");
  o.bind(cmd, "--label-column", "label_column", "Column holding 0/1 labels");
  cmd->add_option("--set", o.sets, "Any config key as key=value (repeatable)");
  cmd->add_flag("--print-config", o.print_config, "Print the merged configuration with origins first");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-based anomaly detection for multivariate time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mimgan_version());

  RunOptions train_opts;
  std::string resume;
  CLI::App* train = app.add_subcommand("train", "Train generator and discriminator on a CSV series");
  add_common(train, train_opts);
  train_opts.bind(train, "--epochs", "epochs", "Epoch cap");
  train_opts.bind(train, "--batch-size", "batch_size", "Minibatch size");
  train_opts.bind(train, "--seq-length", "seq_length", "Window length");
  train_opts.bind(train, "--lr-g", "lr_g", "Generator learning rate");
  train_opts.bind(train, "--lr-d", "lr_d", "Discriminator learning rate");
  train_opts.bind(train, "--loss", "loss", "mim or log");
  train->add_option("--resume", resume, "Continue from this checkpoint");

  RunOptions detect_opts;
  CLI::App* detect = app.add_subcommand("detect", "Score a CSV series with a trained checkpoint");
  add_common(detect, detect_opts);
  detect_opts.bind(detect, "--checkpoint", "checkpoint", "Checkpoint file (default <out>/checkpoint.ckpt)");
  detect_opts.bind(detect, "--tau", "tau", "Anomaly threshold on DIRE / median");
  detect_opts.bind(detect, "--alpha", "alpha", "Weight of the reconstruction term");
  detect_opts.bind(detect, "--inversion-iters", "inversion_iters", "Latent search iterations");
  detect_opts.bind(detect, "--seq-length", "seq_length", "Ignored; the checkpoint fixes the window length");
  detect_opts.bind(detect, "--detect-stride", "detect_stride", "Window stride at detection");

  std::string pred, truth, label_column = "label";
  CLI::App* eval = app.add_subcommand("eval", "Point-wise precision, recall and F1 between two label columns");
  eval->add_option("--pred", pred, "CSV with predicted labels")->required();
  eval->add_option("--truth", truth, "CSV with true labels")->required();
  eval->add_option("--label-column", label_column, "Label column name in both files");

  std::size_t gc_seeds = 20;
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every gradient path");
  gradcheck->add_option("--seeds", gc_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "First seed");
  gradcheck->add_option("--tolerance", gc_tol, "Maximum relative error")->check(CLI::PositiveNumber);

  std::string synth_out;
  std::uint64_t synth_seed = 1;
  std::vector<std::string> synth_sets;
  std::string synth_spec;
  auto synth_key = [&synth_spec](const std::string& key) {
    return [&synth_spec, key](const std::string& v) { synth_spec += key + " = " + v + "\n"; };
  };
  CLI::App* synth = app.add_subcommand("synth", "Write a labeled synthetic series");
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option_function<std::string>("--features", synth_key("n"), "Variables per timestep");
  synth->add_option_function<std::string>("--length", synth_key("T"), "Timesteps");
  synth->add_option_function<std::string>("--contamination", synth_key("contamination"),
                                          "Fraction of anomalous timesteps, in [0, 0.5]");
  synth->add_option_function<std::string>("--anomaly-kinds", synth_key("anomaly_kinds"),
                                          "Comma list of spike, level_shift, correlation_break");
  synth->add_option("--set", synth_sets, "Any generator key as key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  auto run_with_config = [](const char* name, const RunOptions& o,
                            const std::function<mimgan_status(mimgan_config*, mimgan_text**)>& body) {
    ConfigHandle h;
    mimgan_status s = build_config(o, h);
    if (s != MIMGAN_OK) return report_failure(name, s);
    if (o.print_config) {
      mimgan_text* dump = nullptr;
      s = mimgan_config_dump(h.ptr, &dump);
      if (s != MIMGAN_OK) return report_failure(name, s);
      print(dump);
    }
    mimgan_text* out = nullptr;
    s = body(h.ptr, &out);
    print(out);
    return s == MIMGAN_OK ? kExitOk : report_failure(name, s);
  };

  if (*train) {
    return run_with_config("train", train_opts, [&](mimgan_config* c, mimgan_text** out) {
      return mimgan_train(c, resume.empty() ? nullptr : resume.c_str(), out);
    });
  }
  if (*detect) {
    return run_with_config("detect", detect_opts, [](mimgan_config* c, mimgan_text** out) {
      return mimgan_detect(c, out);
    });
  }
  if (*eval) {
    mimgan_text* out = nullptr;
    const mimgan_status s = mimgan_eval(pred.c_str(), truth.c_str(), label_column.c_str(), &out);
    print(out);
    return s == MIMGAN_OK ? kExitOk : report_failure("eval", s);
  }
  if (*gradcheck) {
    mimgan_text* out = nullptr;
    const mimgan_status s = mimgan_gradcheck(gc_seeds, gc_seed, gc_tol, &out);
    print(out);
    return s == MIMGAN_OK ? kExitOk : report_failure("gradcheck", s);
  }
  if (*synth) {
    for (const std::string& kv : synth_sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
        return kExitConfig;
      }
      synth_spec += kv.substr(0, eq) + " = " + kv.substr(eq + 1) + "\n";
    }
    mimgan_text* out = nullptr;
    mimgan_status s = mimgan_synth(synth_spec.c_str(), synth_seed, synth_out.c_str(), &out);
    // Generator preconditions (e.g. contamination above 0.5) are usage errors.
    if (s == MIMGAN_DOMAIN) s = MIMGAN_CONFIG;
    print(out);
    return s == MIMGAN_OK ? kExitOk : report_failure("synth", s);
  }
  return kExitFailure;
}
