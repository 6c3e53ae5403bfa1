#include "core/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/io.hpp"

namespace mimgan {
namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::string str(std::uint64_t v) { return std::to_string(v); }
std::string str(double v) { return io::format_double(v); }
std::string str(bool v) { return v ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MIMGAN_SIZE_FIELD(name, member) \
  Field { name, [](RunConfig& c, const std::string& v) { c.member = parse_size(name, v); }, \
          [](const RunConfig& c) { return str(static_cast<std::uint64_t>(c.member)); } }
#define MIMGAN_REAL_FIELD(name, member) \
  Field { name, [](RunConfig& c, const std::string& v) { c.member = parse_real(name, v); }, \
          [](const RunConfig& c) { return str(c.member); } }
#define MIMGAN_TEXT_FIELD(name, member) \
  Field { name, [](RunConfig& c, const std::string& v) { c.member = v; }, \
          [](const RunConfig& c) { return c.member; } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
            [](const RunConfig& c) { return str(c.seed); }},
      MIMGAN_TEXT_FIELD("data", data),
      MIMGAN_TEXT_FIELD("label_column", label_column),
      MIMGAN_TEXT_FIELD("out", out),
      MIMGAN_TEXT_FIELD("checkpoint", checkpoint),
      MIMGAN_SIZE_FIELD("seq_length", seq_length),
      MIMGAN_SIZE_FIELD("train_stride", train_stride),
      MIMGAN_SIZE_FIELD("detect_stride", detect_stride),
      MIMGAN_SIZE_FIELD("score_chunk", score_chunk),
      MIMGAN_SIZE_FIELD("features", net.features),
      MIMGAN_SIZE_FIELD("latent_dim", net.latent_dim),
      MIMGAN_SIZE_FIELD("g_hidden", net.g_hidden),
      MIMGAN_SIZE_FIELD("g_layers", net.g_layers),
      MIMGAN_SIZE_FIELD("d_hidden", net.d_hidden),
      MIMGAN_SIZE_FIELD("d_layers", net.d_layers),
      MIMGAN_SIZE_FIELD("epochs", train.epochs),
      MIMGAN_SIZE_FIELD("batch_size", train.batch_size),
      MIMGAN_REAL_FIELD("lr_d", train.lr_d),
      MIMGAN_REAL_FIELD("lr_g", train.lr_g),
      MIMGAN_SIZE_FIELD("d_steps", train.d_steps_per_g_step),
      MIMGAN_REAL_FIELD("weight_decay", train.weight_decay),
      MIMGAN_REAL_FIELD("beta1", train.beta1),
      MIMGAN_REAL_FIELD("beta2", train.beta2),
      MIMGAN_REAL_FIELD("adam_eps", train.adam_eps),
      MIMGAN_SIZE_FIELD("checkpoint_every", train.checkpoint_every),
      Field{"loss", [](RunConfig& c, const std::string& v) { c.train.loss = parse_loss_kind(v); },
            [](const RunConfig& c) { return to_string(c.train.loss); }},
      MIMGAN_REAL_FIELD("score_clamp", train.score_clamp),
      Field{"early_stop", [](RunConfig& c, const std::string& v) { c.train.early_stop = parse_bool("early_stop", v); },
            [](const RunConfig& c) { return str(c.train.early_stop); }},
      MIMGAN_SIZE_FIELD("rolling_window", train.rolling_window),
      MIMGAN_REAL_FIELD("stop_tolerance", train.stop_tolerance),
      MIMGAN_SIZE_FIELD("stop_patience", train.stop_patience),
      MIMGAN_REAL_FIELD("alpha", score.alpha),
      MIMGAN_REAL_FIELD("tau", score.tau),
      MIMGAN_SIZE_FIELD("inversion_iters", score.inversion_iters),
      MIMGAN_REAL_FIELD("inversion_lr", score.inversion_lr),
      MIMGAN_SIZE_FIELD("inversion_restarts", score.inversion_restarts),
      Field{"dis_mode", [](RunConfig& c, const std::string& v) { c.score.dis_mode = detect::parse_dis_mode(v); },
            [](const RunConfig& c) { return detect::to_string(c.score.dis_mode); }},
  };
  return table;
}

#undef MIMGAN_SIZE_FIELD
#undef MIMGAN_REAL_FIELD
#undef MIMGAN_TEXT_FIELD

const Field& field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

KeyValues to_kv(const NetConfig& c) {
  return {{"features", str(static_cast<std::uint64_t>(c.features))},
          {"latent_dim", str(static_cast<std::uint64_t>(c.latent_dim))},
          {"g_hidden", str(static_cast<std::uint64_t>(c.g_hidden))},
          {"g_layers", str(static_cast<std::uint64_t>(c.g_layers))},
          {"d_hidden", str(static_cast<std::uint64_t>(c.d_hidden))},
          {"d_layers", str(static_cast<std::uint64_t>(c.d_layers))}};
}

KeyValues to_kv(const TrainConfig& c) {
  RunConfig r;
  r.train = c;
  r.seed = c.seed;
  KeyValues all = r.to_kv();
  KeyValues out;
  for (const char* k : {"epochs", "batch_size", "lr_d", "lr_g", "d_steps", "weight_decay", "beta1", "beta2",
                        "adam_eps", "checkpoint_every", "loss", "score_clamp", "early_stop", "rolling_window",
                        "stop_tolerance", "stop_patience", "seed"}) {
    out[k] = all.at(k);
  }
  return out;
}

KeyValues to_kv(const detect::ScoreConfig& c) {
  RunConfig r;
  r.score = c;
  r.seed = c.seed;
  KeyValues all = r.to_kv();
  KeyValues out;
  for (const char* k : {"alpha", "tau", "inversion_iters", "inversion_lr", "inversion_restarts", "dis_mode", "seed"}) {
    out[k] = all.at(k);
  }
  out["beta"] = io::format_double(c.beta());
  return out;
}

std::vector<std::string> kv_diff(const KeyValues& a, const KeyValues& b) {
  std::set<std::string> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  std::vector<std::string> out;
  for (const std::string& k : keys) {
    auto ia = a.find(k), ib = b.find(k);
    if (ia == a.end() || ib == b.end() || ia->second != ib->second) out.push_back(k);
  }
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, io::trim(value)); }

KeyValues RunConfig::to_kv() const {
  KeyValues out;
  for (const Field& f : fields()) out[f.key] = f.get(*this);
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

std::size_t RunConfig::effective_train_stride() const {
  return train_stride > 0 ? train_stride : std::max<std::size_t>(1, seq_length / 3);
}

std::string RunConfig::effective_checkpoint() const {
  return checkpoint.empty() ? out + "/checkpoint.ckpt" : checkpoint;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

detect::ScoreConfig RunConfig::score_config() const {
  detect::ScoreConfig s = score;
  s.seed = seed;
  return s;
}

void RunConfig::validate() const {
  if (seq_length == 0) throw ConfigError("seq_length must be at least 1");
  if (detect_stride == 0) throw ConfigError("detect_stride must be at least 1");
  if (out.empty()) throw ConfigError("out must name a directory");
  net.validate();
  train_config().validate();
  score_config().validate();
}

ResolvedConfig resolve_config(const ConfigSources& sources) {
  ResolvedConfig r;
  for (const std::string& k : RunConfig::keys()) r.origin[k] = "default";
  const std::pair<const KeyValues*, const char*> layers[] = {
      {&sources.env, "env"}, {&sources.file, "file"}, {&sources.flags, "flag"}};
  for (const auto& [kv, name] : layers) {
    for (const auto& [k, v] : *kv) {
      try {
        r.config.set(k, v);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + " (from " + name + ")");
      }
      r.origin[k] = name;
    }
  }
  r.config.validate();
  return r;
}

KeyValues env_overrides(const std::function<const char*(const char*)>& getenv_fn) {
  KeyValues out;
  for (const std::string& k : RunConfig::keys()) {
    std::string name = "MIMGAN_";
    for (char ch : k) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (const char* v = getenv_fn(name.c_str())) out[k] = v;
  }
  return out;
}

std::string format_resolved(const ResolvedConfig& r) {
  std::string out;
  for (const auto& [k, v] : r.config.to_kv()) out += k + " = " + v + "  # " + r.origin.at(k) + "\n";
  return out;
}

}  // namespace mimgan
