#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "core/data.hpp"
#include "core/error.hpp"

namespace mimgan::data {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("mimgan_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

TimeSeries series(std::size_t length, std::size_t width, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  TimeSeries ts;
  ts.length = length;
  ts.width = width;
  ts.values.resize(length * width);
  for (double& v : ts.values) v = u(rng);
  return ts;
}

TEST(Csv, ParsesHeaderAndRows) {
  TempDir dir;
  const TimeSeries ts = ingest_csv(dir.file("a.csv", "x,y\n1,2\n3,4\n5,6\n"));
  EXPECT_EQ(ts.length, 3u);
  EXPECT_EQ(ts.width, 2u);
  EXPECT_EQ(ts.names, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(ts.at(2, 1), 6.0);
  EXPECT_FALSE(ts.labels.has_value());
}

TEST(Csv, LabelColumnPopulatesLabels) {
  CsvSchema schema;
  schema.label_column = "attack";
  const TimeSeries ts = parse_csv("x,attack,y\n1,0,2\n3,1,4\r\n\n", schema);
  ASSERT_TRUE(ts.labels.has_value());
  EXPECT_EQ(*ts.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(ts.width, 2u);
  EXPECT_EQ(ts.at(1, 1), 4.0);
}

TEST(Csv, SelectsDeclaredColumnsInOrder) {
  CsvSchema schema;
  schema.columns = {"c", "a"};
  const TimeSeries ts = parse_csv("a,b,c\n1,2,3\n", schema);
  EXPECT_EQ(ts.names, (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(ts.at(0, 0), 3.0);
}

TEST(Csv, ErrorsNameRowAndColumn) {
  EXPECT_THROW(parse_csv(""), IoError);
  try {
    parse_csv("x,y\n1,2\n3,oops\n", {}, "f.csv");
    FAIL();
  } catch (const IoError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("f.csv:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_csv("x,y\n1,2,3\n"), IoError);
  CsvSchema schema;
  schema.label_column = "label";
  EXPECT_THROW(parse_csv("x,label\n1,2\n", schema), IoError);
  EXPECT_THROW(parse_csv("x,y\n1,nan\n"), IoError);
  EXPECT_THROW(ingest_csv("/nonexistent/path.csv"), IoError);
}

TEST(Csv, RoundTripsThroughFormat) {
  TimeSeries ts = series(4, 2);
  ts.names = {"p", "q"};
  ts.labels = std::vector<int>{0, 1, 1, 0};
  CsvSchema schema;
  schema.label_column = "label";
  const TimeSeries back = parse_csv(format_csv(ts), schema);
  EXPECT_EQ(back.values, ts.values);
  EXPECT_EQ(back.labels, ts.labels);
}

TEST(Normalize, MidpointAndEndpoints) {
  TimeSeries train;
  train.length = 2;
  train.width = 1;
  train.values = {0.0, 10.0};
  const NormStats stats = fit_norm(train);
  TimeSeries test = train;
  test.length = 4;
  test.values = {5.0, 10.0, 0.0, 20.0};
  const TimeSeries n = normalize(test, stats);
  EXPECT_EQ(n.values, (std::vector<double>{0.0, 1.0, -1.0, 3.0}));
}

TEST(Normalize, ConstantVariableMapsToZero) {
  TimeSeries ts;
  ts.length = 3;
  ts.width = 2;
  ts.values = {7.0, 1.0, 7.0, 2.0, 7.0, 3.0};
  const TimeSeries n = normalize(ts, fit_norm(ts));
  EXPECT_EQ(n.at(0, 0), 0.0);
  EXPECT_EQ(n.at(2, 0), 0.0);
  EXPECT_EQ(n.at(2, 1), 1.0);
}

TEST(Normalize, InvertibleOnNonDegenerateVariables) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const TimeSeries ts = series(50, 3, seed);
    const NormStats stats = fit_norm(ts);
    const TimeSeries back = denormalize(normalize(ts, stats), stats);
    for (std::size_t i = 0; i < ts.values.size(); ++i) EXPECT_NEAR(back.values[i], ts.values[i], 1e-12);
  }
}

TEST(Windows, CountFormula) {
  EXPECT_EQ(make_windows(series(10, 2), 3, 1).count(), 8u);
  const WindowSet whole = make_windows(series(10, 2), 10, 1);
  EXPECT_EQ(whole.count(), 1u);
  EXPECT_EQ(whole.origins[0], 0u);
  EXPECT_EQ(make_windows(series(10, 1), 3, 3).count(), 3u);  // 0, 3, 6; t = 9 dropped
  EXPECT_EQ(make_windows(series(200, 1), 90, 1).count(), 111u);
  EXPECT_THROW(make_windows(series(10, 1), 11, 1), DomainError);
  EXPECT_THROW(make_windows(series(10, 1), 3, 0), DomainError);
  EXPECT_THROW(make_windows(series(10, 1), 0, 1), DomainError);
}

TEST(Windows, PureViewOfSeries) {
  const TimeSeries ts = series(23, 3);
  for (std::size_t stride : {1u, 2u, 5u}) {
    const WindowSet w = make_windows(ts, 6, stride);
    EXPECT_EQ(w.count(), (23 - 6) / stride + 1);
    for (std::size_t j = 0; j < w.count(); ++j) {
      EXPECT_EQ(w.origins[j], j * stride);
      const Tensor win = w.window(j);
      for (std::size_t s = 0; s < 6; ++s) {
        for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(win[s * 3 + v], ts.at(w.origins[j] + s, v));
      }
    }
  }
}

TEST(Windows, StrideOneMultiplicityMatchesEnumeration) {
  for (std::size_t length : {5u, 12u, 30u}) {
    for (std::size_t sw : {1u, 3u, 5u}) {
      const WindowSet w = make_windows(series(length, 1), sw, 1);
      std::map<std::size_t, std::size_t> count;
      for (std::size_t j = 0; j < w.count(); ++j) {
        for (std::size_t s = 0; s < sw; ++s) ++count[w.origins[j] + s];
      }
      const std::size_t m = w.count();
      for (std::size_t t = 0; t < length; ++t) {
        EXPECT_EQ(count[t], std::min({t + 1, sw, m, length - t})) << "T=" << length << " S=" << sw << " t=" << t;
      }
    }
  }
}

TEST(Windows, GatherStacksSelectedWindows) {
  const WindowSet w = make_windows(series(12, 2), 4, 2);
  const std::vector<std::size_t> idx{3, 0};
  const Tensor g = w.gather(idx);
  EXPECT_EQ(g.shape(), (Shape{2, 4, 2}));
  EXPECT_EQ(g[0], w.window(3)[0]);
  EXPECT_EQ(g[8], w.window(0)[0]);
}

TEST(Synth, ZeroContaminationHasNoLabels) {
  SynthSpec spec;
  spec.length = 500;
  spec.contamination = 0.0;
  const SynthResult r = synth_dataset(spec, 3);
  ASSERT_TRUE(r.series.labels.has_value());
  EXPECT_EQ(std::count(r.series.labels->begin(), r.series.labels->end(), 1), 0);
  EXPECT_TRUE(r.events.empty());
}

TEST(Synth, SpikeAtFiftyIsLabeled) {
  SynthSpec spec;
  spec.length = 100;
  spec.contamination = 0.0;
  SynthResult r = synth_dataset(spec, 4);
  const TimeSeries before = r.series;
  AnomalyEvent e;
  e.kind = AnomalyKind::kSpike;
  e.start = 50;
  e.length = 1;
  e.variables = {2};
  e.magnitude = 10.0;
  inject_anomaly(r.series, e, r.sigma, spec);
  EXPECT_EQ((*r.series.labels)[50], 1);
  EXPECT_EQ(std::count(r.series.labels->begin(), r.series.labels->end(), 1), 1);
  EXPECT_NEAR(r.series.at(50, 2) - before.at(50, 2), 10.0 * r.sigma[2], 1e-12);
  EXPECT_EQ(r.series.at(50, 1), before.at(50, 1));
}

TEST(Synth, ReproduciblePerSeed) {
  SynthSpec spec;
  spec.length = 800;
  const SynthResult a = synth_dataset(spec, 9), b = synth_dataset(spec, 9), c = synth_dataset(spec, 10);
  EXPECT_EQ(a.series.values, b.series.values);
  EXPECT_EQ(a.series.labels, b.series.labels);
  EXPECT_NE(a.series.values, c.series.values);
}

TEST(Synth, ContaminationMatchesBudgetAndLabelsMatchEvents) {
  SynthSpec spec;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthResult r = synth_dataset(spec, seed);
    const auto& labels = *r.series.labels;
    const auto anomalous = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    EXPECT_NEAR(anomalous / 5000.0, 0.05, 0.01) << "seed " << seed;
    std::vector<int> from_events(labels.size(), 0);
    for (const AnomalyEvent& e : r.events) {
      EXPECT_NE(e.kind, AnomalyKind::kCorrelationBreak);
      for (std::size_t t = e.start; t < e.start + e.length; ++t) from_events[t] = 1;
    }
    EXPECT_EQ(from_events, labels);
  }
}

TEST(Synth, RejectsContaminationOutsideRange) {
  SynthSpec spec;
  spec.contamination = 0.6;
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(synth_dataset(spec, 1), ConfigError);
  spec.contamination = -0.1;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Synth, KeyValueSpecRoundTrips) {
  const SynthSpec s = SynthSpec::from_kv({{"n", "3"}, {"T", "400"}, {"contamination", "0.1"},
                                          {"anomaly_kinds", "spike,correlation_break"}, {"seed", "7"}});
  EXPECT_EQ(s.features, 3u);
  EXPECT_EQ(s.length, 400u);
  EXPECT_EQ(s.kinds.size(), 2u);
  EXPECT_EQ(s.kinds[1], AnomalyKind::kCorrelationBreak);
  const SynthSpec again = SynthSpec::from_kv(s.to_kv());
  EXPECT_EQ(again.to_kv(), s.to_kv());
  EXPECT_THROW(SynthSpec::from_kv({{"bogus", "1"}}), ConfigError);
  EXPECT_THROW(SynthSpec::from_kv({{"anomaly_kinds", "wobble"}}), ConfigError);
}

TEST(Synth, NormalRegimeVariablesAreCorrelated) {
  SynthSpec spec;
  spec.contamination = 0.0;
  const TimeSeries ts = synth_dataset(spec, 2).series;
  double m0 = 0, m1 = 0;
  for (std::size_t t = 0; t < ts.length; ++t) {
    m0 += ts.at(t, 0);
    m1 += ts.at(t, 1);
  }
  m0 /= ts.length;
  m1 /= ts.length;
  double c = 0, v0 = 0, v1 = 0;
  for (std::size_t t = 0; t < ts.length; ++t) {
    c += (ts.at(t, 0) - m0) * (ts.at(t, 1) - m1);
    v0 += (ts.at(t, 0) - m0) * (ts.at(t, 0) - m0);
    v1 += (ts.at(t, 1) - m1) * (ts.at(t, 1) - m1);
  }
  EXPECT_GT(c / std::sqrt(v0 * v1), 0.5);  // adjacent phases
}

}  // namespace
}  // namespace mimgan::data
