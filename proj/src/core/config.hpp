#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/detect.hpp"
#include "core/networks.hpp"
#include "core/train.hpp"

namespace mimgan {

using KeyValues = std::map<std::string, std::string>;

KeyValues to_kv(const NetConfig& c);
KeyValues to_kv(const TrainConfig& c);
KeyValues to_kv(const detect::ScoreConfig& c);

/// Keys whose values differ between two maps (including keys present in
/// only one of them), sorted.
std::vector<std::string> kv_diff(const KeyValues& a, const KeyValues& b);

/// Everything a run needs, flattened to one key namespace.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string data;          // input CSV (training data for train, test data for detect)
  std::string label_column;  // empty: no labels
  std::string out = "out";
  std::string checkpoint;    // empty: <out>/checkpoint.ckpt
  std::size_t seq_length = 90;
  std::size_t train_stride = 0;  // 0: seq_length / 3 (at least 1)
  std::size_t detect_stride = 1;
  std::size_t score_chunk = 256;
  NetConfig net;
  TrainConfig train;
  detect::ScoreConfig score;

  /// Sets one key from text. Unknown keys and unparseable values throw
  /// ConfigError naming the key.
  void set(const std::string& key, const std::string& value);
  KeyValues to_kv() const;
  static const std::vector<std::string>& keys();

  std::size_t effective_train_stride() const;
  std::string effective_checkpoint() const;
  /// Train and score settings with the run seed applied.
  TrainConfig train_config() const;
  detect::ScoreConfig score_config() const;

  void validate() const;
};

/// Sources in increasing precedence: defaults < environment < file < flags.
struct ConfigSources {
  KeyValues env;
  KeyValues file;
  KeyValues flags;
};

struct ResolvedConfig {
  RunConfig config;
  std::map<std::string, std::string> origin;  // key -> "default" | "env" | "file" | "flag"
};

ResolvedConfig resolve_config(const ConfigSources& sources);

/// MIMGAN_LR_G=0.001 becomes lr_g = 0.001. Variables that do not map to a
/// known key are ignored.
KeyValues env_overrides(const std::function<const char*(const char*)>& getenv_fn);

/// `key = value  # origin` lines, sorted by key.
std::string format_resolved(const ResolvedConfig& r);

}  // namespace mimgan
