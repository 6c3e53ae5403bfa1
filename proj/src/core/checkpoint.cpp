#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <sstream>
#include <variant>

#include "core/error.hpp"
#include "core/io.hpp"

namespace mimgan {
namespace {

constexpr char kMagic[8] = {'M', 'I', 'M', 'G', 'A', 'N', 'C', 'K'};
constexpr std::uint8_t kText = 1;
constexpr std::uint8_t kU64 = 2;
constexpr std::uint8_t kReals = 3;
constexpr std::uint8_t kEnd = 0xff;

struct Reals {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

using Entry = std::variant<std::string, std::uint64_t, Reals>;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }

  void text(const std::string& name, std::string_view value) {
    u8(kText);
    bytes(name);
    bytes(value);
  }
  void number(const std::string& name, std::uint64_t value) {
    u8(kU64);
    bytes(name);
    u64(value);
  }
  void reals(const std::string& name, const Shape& dims, std::span<const double> values) {
    u8(kReals);
    bytes(name);
    u32(static_cast<std::uint32_t>(dims.size()));
    for (std::size_t d : dims) u64(d);
    for (double v : values) f64(v);
  }
  void tensor(const std::string& name, const Tensor& t) { reals(name, t.shape(), t.data()); }
  void series(const std::string& name, const std::vector<double>& v) { reals(name, {v.size()}, v); }

  std::string take() { return std::move(out_); }
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view b, const std::string& origin) : b_(b), origin_(origin) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw IoError(origin_ + ": truncated checkpoint");
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
  const std::string& origin_;
};

void write_tensors(Writer& w, std::vector<std::pair<std::string, Tensor*>> tensors) {
  for (const auto& [name, t] : tensors) w.tensor(name, *t);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.out_.append(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);

  const TrainState& s = ckpt.state;
  w.text("config", io::format_kv(ckpt.config));
  w.text("net", io::format_kv(to_kv(s.params.config)));
  auto& params = const_cast<NetworkParams&>(s.params);
  write_tensors(w, named_tensors(params));

  auto g_tensors = named_tensors(params.generator);
  for (std::size_t i = 0; i < g_tensors.size(); ++i) {
    w.tensor("opt.m." + g_tensors[i].first, s.g_opt.m.at(i));
    w.tensor("opt.v." + g_tensors[i].first, s.g_opt.v.at(i));
  }
  w.number("opt.step", s.g_opt.step);
  w.number("step", s.step);
  w.number("epoch", s.epoch);
  w.number("band_streak", s.band_streak);
  w.number("stopped_early", s.stopped_early ? 1 : 0);
  std::ostringstream rng;
  rng << s.rng;
  w.text("rng", rng.str());

  std::vector<double> d_loss, g_obj, clamps;
  for (const StepRecord& r : s.history) {
    d_loss.push_back(r.d_loss);
    g_obj.push_back(r.g_objective);
    clamps.push_back(static_cast<double>(r.clamp_events));
  }
  w.series("history.d_loss", d_loss);
  w.series("history.g_objective", g_obj);
  w.series("history.clamp_events", clamps);
  w.series("history.epoch_rolling", s.epoch_rolling);
  if (ckpt.norm) {
    w.series("norm.min", ckpt.norm->min);
    w.series("norm.max", ckpt.norm->max);
  }
  w.u8(kEnd);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin) {
  Reader r(bytes, origin);
  r.need(sizeof kMagic);
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw IoError(origin + ": not a checkpoint file");
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(origin + ": checkpoint format version " + std::to_string(version) + ", this build reads " +
                       std::to_string(kCheckpointVersion));
  }

  std::map<std::string, Entry> entries;
  while (true) {
    const std::uint8_t tag = r.u8();
    if (tag == kEnd) break;
    std::string name = r.bytes();
    switch (tag) {
      case kText:
        entries[name] = r.bytes();
        break;
      case kU64:
        entries[name] = r.u64();
        break;
      case kReals: {
        Reals block;
        const std::uint32_t rank = r.u32();
        std::uint64_t count = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
          block.dims.push_back(r.u64());
          count *= block.dims.back();
          if (count > bytes.size()) throw IoError(origin + ": truncated checkpoint");
        }
        r.need(count * 8);
        block.values.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) block.values.push_back(r.f64());
        entries[name] = std::move(block);
        break;
      }
      default:
        throw IoError(origin + ": unknown entry tag " + std::to_string(tag));
    }
  }
  if (!r.at_end()) throw IoError(origin + ": trailing bytes after end marker");

  auto get = [&](const std::string& name) -> const Entry& {
    auto it = entries.find(name);
    if (it == entries.end()) throw IoError(origin + ": missing entry '" + name + "'");
    return it->second;
  };
  auto text = [&](const std::string& name) -> const std::string& {
    const auto* v = std::get_if<std::string>(&get(name));
    if (!v) throw IoError(origin + ": entry '" + name + "' is not text");
    return *v;
  };
  auto number = [&](const std::string& name) {
    const auto* v = std::get_if<std::uint64_t>(&get(name));
    if (!v) throw IoError(origin + ": entry '" + name + "' is not an integer");
    return *v;
  };
  auto reals = [&](const std::string& name) -> const Reals& {
    const auto* v = std::get_if<Reals>(&get(name));
    if (!v) throw IoError(origin + ": entry '" + name + "' is not a real block");
    return *v;
  };
  auto fill = [&](const std::string& name, Tensor& t) {
    const Reals& b = reals(name);
    if (Shape(b.dims.begin(), b.dims.end()) != t.shape()) {
      throw IoError(origin + ": entry '" + name + "' has the wrong shape");
    }
    std::copy(b.values.begin(), b.values.end(), t.mutable_data().begin());
  };

  Checkpoint ckpt;
  ckpt.config = io::parse_kv(text("config"), origin + ":config");
  RunConfig net_only;
  for (const auto& [k, v] : io::parse_kv(text("net"), origin + ":net")) net_only.set(k, v);
  net_only.net.validate();

  TrainState& s = ckpt.state;
  s.params = zero_params(net_only.net);
  for (const auto& [name, t] : named_tensors(s.params)) fill(name, *t);
  for (const auto& [name, t] : named_tensors(s.params.generator)) {
    s.g_opt.m.emplace_back(t->shape());
    s.g_opt.v.emplace_back(t->shape());
    fill("opt.m." + name, s.g_opt.m.back());
    fill("opt.v." + name, s.g_opt.v.back());
  }
  s.g_opt.step = number("opt.step");
  s.step = number("step");
  s.epoch = number("epoch");
  s.band_streak = number("band_streak");
  s.stopped_early = number("stopped_early") != 0;
  std::istringstream rng(text("rng"));
  rng >> s.rng;
  if (!rng) throw IoError(origin + ": corrupt generator state");

  const auto& d_loss = reals("history.d_loss").values;
  const auto& g_obj = reals("history.g_objective").values;
  const auto& clamps = reals("history.clamp_events").values;
  if (g_obj.size() != d_loss.size() || clamps.size() != d_loss.size()) {
    throw IoError(origin + ": history columns differ in length");
  }
  for (std::size_t i = 0; i < d_loss.size(); ++i) {
    s.history.push_back({i, d_loss[i], g_obj[i], static_cast<std::size_t>(clamps[i])});
  }
  s.epoch_rolling = reals("history.epoch_rolling").values;
  if (entries.count("norm.min")) {
    ckpt.norm = data::NormStats{reals("norm.min").values, reals("norm.max").values};
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw IoError(origin + ": " + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  io::atomic_write(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path), path); }

}  // namespace mimgan
