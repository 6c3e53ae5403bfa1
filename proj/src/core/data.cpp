#include "core/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "core/error.hpp"
#include "core/io.hpp"

namespace mimgan::data {

void TimeSeries::validate() const {
  if (length == 0 || width == 0) throw DomainError("time series must have T >= 1 and n >= 1");
  if (values.size() != length * width) throw DomainError("time series value count does not match T x n");
  if (!names.empty() && names.size() != width) throw DomainError("time series needs one name per variable");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("time series contains a non-finite value");
  }
  if (labels) {
    if (labels->size() != length) throw DomainError("labels must have length T");
    for (int l : *labels) {
      if (l != 0 && l != 1) throw DomainError("labels must be 0 or 1");
    }
  }
}

TimeSeries TimeSeries::rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > length) throw DomainError("row range out of bounds");
  TimeSeries out;
  out.length = end - begin;
  out.width = width;
  out.names = names;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * width),
                    values.begin() + static_cast<std::ptrdiff_t>(end * width));
  if (labels) out.labels = std::vector<int>(labels->begin() + static_cast<std::ptrdiff_t>(begin),
                                            labels->begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

namespace {

double parse_number(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw IoError(where + ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace

TimeSeries parse_csv(std::string_view text, const CsvSchema& schema, const std::string& origin) {
  std::vector<std::string> lines;
  for (std::string& l : io::split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw IoError(origin + ": empty file");

  std::vector<std::string> header;
  for (const std::string& h : io::split(lines[0], ',')) header.push_back(io::trim(h));

  std::optional<std::size_t> label_idx;
  if (schema.label_column) {
    auto it = std::find(header.begin(), header.end(), *schema.label_column);
    if (it == header.end()) throw IoError(origin + ": label column '" + *schema.label_column + "' not found");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<std::size_t> var_idx;
  if (schema.columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (!label_idx || i != *label_idx) var_idx.push_back(i);
    }
  } else {
    for (const std::string& c : schema.columns) {
      auto it = std::find(header.begin(), header.end(), c);
      if (it == header.end()) throw IoError(origin + ": column '" + c + "' not found");
      var_idx.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  }
  if (var_idx.empty()) throw IoError(origin + ": no variable columns");

  TimeSeries ts;
  ts.width = var_idx.size();
  for (std::size_t i : var_idx) ts.names.push_back(header[i]);
  if (label_idx) ts.labels.emplace();

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where_row = origin + ":" + std::to_string(r + 1);
    std::vector<std::string> cells = io::split(lines[r], ',');
    if (cells.size() != header.size()) {
      throw IoError(where_row + ": expected " + std::to_string(header.size()) + " columns, got " +
                    std::to_string(cells.size()));
    }
    for (std::size_t i : var_idx) {
      ts.values.push_back(parse_number(io::trim(cells[i]), where_row + ": column " + std::to_string(i + 1)));
    }
    if (label_idx) {
      const std::string cell = io::trim(cells[*label_idx]);
      const double v = parse_number(cell, where_row + ": column " + std::to_string(*label_idx + 1));
      if (v != 0.0 && v != 1.0) throw IoError(where_row + ": label must be 0 or 1, got '" + cell + "'");
      ts.labels->push_back(static_cast<int>(v));
    }
  }
  ts.length = lines.size() - 1;
  if (ts.length == 0) throw IoError(origin + ": no data rows");
  return ts;
}

TimeSeries ingest_csv(const std::string& path, const CsvSchema& schema) {
  return parse_csv(io::read_file(path), schema, path);
}

std::string format_csv(const TimeSeries& ts) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ts.width; ++i) {
    if (i) os << ',';
    os << (ts.names.empty() ? "x" + std::to_string(i) : ts.names[i]);
  }
  if (ts.labels) os << ",label";
  os << '\n';
  for (std::size_t t = 0; t < ts.length; ++t) {
    for (std::size_t i = 0; i < ts.width; ++i) {
      if (i) os << ',';
      os << io::format_double(ts.at(t, i));
    }
    if (ts.labels) os << ',' << (*ts.labels)[t];
    os << '\n';
  }
  return os.str();
}

void write_csv(const TimeSeries& ts, const std::string& path) { io::atomic_write(path, format_csv(ts)); }

NormStats fit_norm(const TimeSeries& train) {
  train.validate();
  NormStats s;
  s.min.assign(train.width, 0.0);
  s.max.assign(train.width, 0.0);
  for (std::size_t i = 0; i < train.width; ++i) {
    s.min[i] = s.max[i] = train.at(0, i);
    for (std::size_t t = 1; t < train.length; ++t) {
      s.min[i] = std::min(s.min[i], train.at(t, i));
      s.max[i] = std::max(s.max[i], train.at(t, i));
    }
  }
  return s;
}

namespace {

void check_stats(const TimeSeries& ts, const NormStats& stats) {
  if (stats.min.size() != ts.width || stats.max.size() != ts.width) {
    throw ShapeError("normalization stats cover " + std::to_string(stats.min.size()) +
                     " variables, series has " + std::to_string(ts.width));
  }
}

}  // namespace

TimeSeries normalize(const TimeSeries& ts, const NormStats& stats) {
  check_stats(ts, stats);
  TimeSeries out = ts;
  for (std::size_t i = 0; i < ts.width; ++i) {
    const double lo = stats.min[i], hi = stats.max[i];
    for (std::size_t t = 0; t < ts.length; ++t) {
      out.at(t, i) = hi > lo ? 2.0 * (ts.at(t, i) - lo) / (hi - lo) - 1.0 : 0.0;
    }
  }
  return out;
}

TimeSeries denormalize(const TimeSeries& ts, const NormStats& stats) {
  check_stats(ts, stats);
  TimeSeries out = ts;
  for (std::size_t i = 0; i < ts.width; ++i) {
    const double lo = stats.min[i], hi = stats.max[i];
    for (std::size_t t = 0; t < ts.length; ++t) {
      out.at(t, i) = hi > lo ? (ts.at(t, i) + 1.0) * 0.5 * (hi - lo) + lo : lo;
    }
  }
  return out;
}

Tensor WindowSet::window(std::size_t j) const {
  const std::size_t cells = window_length * features;
  auto first = windows.data().begin() + static_cast<std::ptrdiff_t>(j * cells);
  return Tensor({window_length, features}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(cells)));
}

Tensor WindowSet::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DomainError("gather: no windows selected");
  const std::size_t cells = window_length * features;
  std::vector<double> out;
  out.reserve(indices.size() * cells);
  for (std::size_t j : indices) {
    if (j >= count()) throw DomainError("gather: window index out of range");
    auto first = windows.data().begin() + static_cast<std::ptrdiff_t>(j * cells);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(cells));
  }
  return Tensor({indices.size(), window_length, features}, std::move(out));
}

WindowSet make_windows(const TimeSeries& ts, std::size_t window_length, std::size_t stride) {
  ts.validate();
  if (window_length == 0) throw DomainError("window length must be at least 1");
  if (stride == 0) throw DomainError("window stride must be at least 1");
  if (window_length > ts.length) {
    throw DomainError("window length " + std::to_string(window_length) + " exceeds series length " +
                      std::to_string(ts.length));
  }
  WindowSet w;
  w.window_length = window_length;
  w.stride = stride;
  w.features = ts.width;
  w.series_length = ts.length;
  const std::size_t m = (ts.length - window_length) / stride + 1;
  std::vector<double> data;
  data.reserve(m * window_length * ts.width);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t origin = j * stride;
    w.origins.push_back(origin);
    auto first = ts.values.begin() + static_cast<std::ptrdiff_t>(origin * ts.width);
    data.insert(data.end(), first, first + static_cast<std::ptrdiff_t>(window_length * ts.width));
  }
  w.windows = Tensor({m, window_length, ts.width}, std::move(data));
  return w;
}

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kSpike: return "spike";
    case AnomalyKind::kLevelShift: return "level_shift";
    case AnomalyKind::kCorrelationBreak: return "correlation_break";
  }
  return "unknown";
}

AnomalyKind parse_anomaly_kind(const std::string& name) {
  if (name == "spike") return AnomalyKind::kSpike;
  if (name == "level_shift") return AnomalyKind::kLevelShift;
  if (name == "correlation_break") return AnomalyKind::kCorrelationBreak;
  throw ConfigError("unknown anomaly kind '" + name + "'");
}

void SynthSpec::validate() const {
  if (features == 0 || length == 0) throw ConfigError("synth: n and T must be positive");
  if (!(contamination >= 0.0 && contamination <= 0.5)) {
    throw ConfigError("synth: contamination must lie in [0, 0.5], got " + io::format_double(contamination));
  }
  if (contamination > 0.0 && kinds.empty()) throw ConfigError("synth: contamination needs at least one anomaly kind");
  if (!(period > 1.0) || !(ar_coef >= 0.0 && ar_coef < 1.0) || !(noise_sigma >= 0.0)) {
    throw ConfigError("synth: invalid period, ar_coef or noise_sigma");
  }
  if (max_spike_width == 0 || min_segment == 0 || max_segment < min_segment) {
    throw ConfigError("synth: invalid anomaly widths");
  }
}

std::map<std::string, std::string> SynthSpec::to_kv() const {
  std::string k;
  for (std::size_t i = 0; i < kinds.size(); ++i) k += (i ? "," : "") + to_string(kinds[i]);
  return {{"n", std::to_string(features)},
          {"T", std::to_string(length)},
          {"contamination", io::format_double(contamination)},
          {"anomaly_kinds", k},
          {"seed", std::to_string(seed)},
          {"period", io::format_double(period)},
          {"ar_coef", io::format_double(ar_coef)},
          {"noise_sigma", io::format_double(noise_sigma)},
          {"spike_sigma", io::format_double(spike_sigma)},
          {"shift_sigma", io::format_double(shift_sigma)},
          {"max_spike_width", std::to_string(max_spike_width)},
          {"min_segment", std::to_string(min_segment)},
          {"max_segment", std::to_string(max_segment)}};
}

namespace {

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("synth: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("synth: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

}  // namespace

SynthSpec SynthSpec::from_kv(const std::map<std::string, std::string>& kv) {
  SynthSpec s;
  for (const auto& [key, v] : kv) {
    if (key == "n") s.features = to_count(key, v);
    else if (key == "T") s.length = to_count(key, v);
    else if (key == "contamination") s.contamination = to_real(key, v);
    else if (key == "seed") s.seed = to_count(key, v);
    else if (key == "period") s.period = to_real(key, v);
    else if (key == "ar_coef") s.ar_coef = to_real(key, v);
    else if (key == "noise_sigma") s.noise_sigma = to_real(key, v);
    else if (key == "spike_sigma") s.spike_sigma = to_real(key, v);
    else if (key == "shift_sigma") s.shift_sigma = to_real(key, v);
    else if (key == "max_spike_width") s.max_spike_width = to_count(key, v);
    else if (key == "min_segment") s.min_segment = to_count(key, v);
    else if (key == "max_segment") s.max_segment = to_count(key, v);
    else if (key == "anomaly_kinds") {
      s.kinds.clear();
      for (const std::string& part : io::split(v, ',')) {
        const std::string name = io::trim(part);
        if (!name.empty()) s.kinds.push_back(parse_anomaly_kind(name));
      }
    } else {
      throw ConfigError("synth: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

namespace {

double periodic(const SynthSpec& spec, std::size_t var, std::size_t t) {
  constexpr double kTau = 2.0 * std::numbers::pi;
  const double phase = kTau * static_cast<double>(var) / static_cast<double>(spec.features + 1);
  const double x = static_cast<double>(t);
  return std::sin(kTau * x / spec.period + phase) + 0.5 * std::sin(kTau * x / (4.0 * spec.period));
}

}  // namespace

void inject_anomaly(TimeSeries& ts, const AnomalyEvent& event, std::span<const double> sigma,
                    const SynthSpec& spec) {
  if (event.length == 0 || event.start + event.length > ts.length) {
    throw DomainError("anomaly event outside the series");
  }
  if (sigma.size() != ts.width) throw ShapeError("sigma must have one entry per variable");
  if (!ts.labels) ts.labels = std::vector<int>(ts.length, 0);
  for (std::size_t t = event.start; t < event.start + event.length; ++t) {
    for (std::size_t v : event.variables) {
      if (v >= ts.width) throw DomainError("anomaly variable index out of range");
      switch (event.kind) {
        case AnomalyKind::kSpike:
        case AnomalyKind::kLevelShift:
          ts.at(t, v) += event.magnitude * sigma[v];
          break;
        case AnomalyKind::kCorrelationBreak:
          // Flip the periodic component so this variable decouples from the rest.
          ts.at(t, v) -= 2.0 * periodic(spec, v, t);
          break;
      }
    }
    (*ts.labels)[t] = 1;
  }
}

SynthResult synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthResult result;
  TimeSeries& ts = result.series;
  ts.length = spec.length;
  ts.width = spec.features;
  ts.values.assign(spec.length * spec.features, 0.0);
  for (std::size_t i = 0; i < spec.features; ++i) ts.names.push_back("x" + std::to_string(i));
  ts.labels = std::vector<int>(spec.length, 0);

  const double innovation = std::sqrt(1.0 - spec.ar_coef * spec.ar_coef) * spec.noise_sigma;
  for (std::size_t i = 0; i < spec.features; ++i) {
    double noise = spec.noise_sigma * normal(rng);
    for (std::size_t t = 0; t < spec.length; ++t) {
      if (t > 0) noise = spec.ar_coef * noise + innovation * normal(rng);
      ts.at(t, i) = periodic(spec, i, t) + noise;
    }
  }

  result.sigma.assign(spec.features, 0.0);
  for (std::size_t i = 0; i < spec.features; ++i) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < spec.length; ++t) mean += ts.at(t, i);
    mean /= static_cast<double>(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) sq += (ts.at(t, i) - mean) * (ts.at(t, i) - mean);
    result.sigma[i] = std::sqrt(sq / static_cast<double>(spec.length));
  }

  const auto budget = static_cast<std::size_t>(std::llround(spec.contamination * static_cast<double>(spec.length)));
  std::vector<char> taken(spec.length, 0);
  std::size_t labeled = 0;
  std::size_t failures = 0;
  while (labeled < budget && failures < 200) {
    AnomalyEvent ev;
    ev.kind = spec.kinds[std::uniform_int_distribution<std::size_t>(0, spec.kinds.size() - 1)(rng)];
    std::size_t len = ev.kind == AnomalyKind::kSpike
                          ? std::uniform_int_distribution<std::size_t>(1, spec.max_spike_width)(rng)
                          : std::uniform_int_distribution<std::size_t>(spec.min_segment, spec.max_segment)(rng);
    len = std::min(len, budget - labeled);
    if (len + 2 > spec.length) {
      ++failures;
      continue;
    }
    // Keep a one-step gap to neighbouring events so segments stay distinct.
    const std::size_t start = std::uniform_int_distribution<std::size_t>(1, spec.length - len - 1)(rng);
    bool clash = false;
    for (std::size_t t = start - 1; t <= start + len && !clash; ++t) clash = taken[t] != 0;
    if (clash) {
      ++failures;
      continue;
    }
    ev.start = start;
    ev.length = len;
    const std::size_t max_vars = std::max<std::size_t>(1, spec.features / 2);
    const std::size_t nvars = std::uniform_int_distribution<std::size_t>(1, max_vars)(rng);
    std::vector<std::size_t> vars(spec.features);
    for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = i;
    std::shuffle(vars.begin(), vars.end(), rng);
    vars.resize(nvars);
    std::sort(vars.begin(), vars.end());
    ev.variables = std::move(vars);
    const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    ev.magnitude = sign * (ev.kind == AnomalyKind::kSpike ? spec.spike_sigma : spec.shift_sigma);
    inject_anomaly(ts, ev, result.sigma, spec);
    for (std::size_t t = start; t < start + len; ++t) taken[t] = 1;
    labeled += len;
    result.events.push_back(std::move(ev));
  }
  return result;
}

}  // namespace mimgan::data
