#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "core/data.hpp"
#include "core/detect.hpp"
#include "core/error.hpp"
#include "core/networks.hpp"
#include "core/train.hpp"

namespace mimgan::detect {
namespace {

NetConfig tiny_net() {
  NetConfig c;
  c.features = 2;
  c.latent_dim = 3;
  c.g_hidden = 6;
  c.d_hidden = 4;
  return c;
}

data::TimeSeries ramp(std::size_t length) {
  data::TimeSeries ts;
  ts.length = length;
  ts.width = 1;
  for (std::size_t t = 0; t < length; ++t) ts.values.push_back(static_cast<double>(t));
  return ts;
}

// Enumerates every (j, s) pair with origin(j) + s = t.
std::vector<double> brute_force_dire(const std::vector<double>& losses, const data::WindowSet& w) {
  std::vector<double> out(w.series_length, 0.0);
  for (std::size_t t = 0; t < w.series_length; ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < w.count(); ++j) {
      for (std::size_t s = 0; s < w.window_length; ++s) {
        if (w.origins[j] + s == t) {
          sum += losses[j];
          ++n;
        }
      }
    }
    out[t] = n ? sum / static_cast<double>(n) : 0.0;
  }
  return out;
}

TEST(Simi, Examples) {
  const std::vector<double> a{1.0, 1.0}, e0{1.0, 0.0}, e1{0.0, 1.0};
  EXPECT_DOUBLE_EQ(simi(a, a), 1.0);
  EXPECT_EQ(simi(e0, e1), 0.0);
  EXPECT_NEAR(simi(a, e0), 0.7071067811865476, 1e-15);
  EXPECT_DOUBLE_EQ(simi(e0, std::vector<double>{-3.0, 0.0}), -1.0);
}

TEST(Simi, Errors) {
  EXPECT_THROW(simi(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 0.0}), DomainError);
  EXPECT_THROW(simi(std::vector<double>{1.0}, std::vector<double>{1.0, 0.0}), ShapeError);
}

TEST(RecScore, Examples) {
  Tensor x({3, 2}), y({3, 2});
  EXPECT_EQ(rec_score(x, x), 0.0);
  for (double& v : y.mutable_data()) v = 1.0;
  EXPECT_EQ(rec_score(x, y), 6.0);
  for (double& v : y.mutable_data()) v = -1.0;
  EXPECT_EQ(rec_score(x, y), 6.0);
  EXPECT_THROW(rec_score(x, Tensor({2, 3})), ShapeError);
}

TEST(DisScore, OrientationAndLimits) {
  EXPECT_EQ(dis_score(0.0), 0.5);
  EXPECT_LT(dis_score(50.0), 1e-20);
  EXPECT_GT(dis_score(-50.0), 1.0 - 1e-15);
  double prev = 1.0;
  for (double d = -10.0; d <= 10.0; d += 0.5) {
    EXPECT_LT(dis_score(d), prev);
    prev = dis_score(d);
  }
  EXPECT_EQ(dis_score(-2.5, DisMode::kRaw), -2.5);
  EXPECT_EQ(parse_dis_mode(to_string(DisMode::kRaw)), DisMode::kRaw);
  EXPECT_THROW(parse_dis_mode("calibrated"), ConfigError);
}

TEST(AdLoss, WeightsAndNormalization) {
  ScoreConfig c;
  c.alpha = 0.5;
  EXPECT_DOUBLE_EQ(ad_loss(12.0, 4.0, 6, c), 3.0);  // rec/cells = 2
  c.alpha = 0.99;
  EXPECT_NEAR(ad_loss(12.0, 4.0, 6, c), 2.0, 0.03);
  c.alpha = 0.7;
  EXPECT_DOUBLE_EQ(c.beta(), 1.0 - 0.7);
  EXPECT_LT(ad_loss(1.0, 0.2, 4, c), ad_loss(1.5, 0.2, 4, c));
  EXPECT_LT(ad_loss(1.0, 0.2, 4, c), ad_loss(1.0, 0.3, 4, c));
}

TEST(ScoreConfig, AlphaMustLeaveBothWeightsPositive) {
  ScoreConfig c;
  for (double a : {0.0, 1.0, -0.2, 1.5}) {
    c.alpha = a;
    EXPECT_THROW(c.validate(), ConfigError) << a;
  }
  c.alpha = 0.5;
  c.tau = INFINITY;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Inversion, GeneratedWindowIsAFixedPoint) {
  const NetworkParams p = init_params(tiny_net(), 2);
  std::mt19937_64 rng(2);
  const Tensor z0 = sample_latent(rng, 1, 5, 3).reshaped({5, 3});
  const Tensor x = generate(p.generator, z0.reshaped({1, 5, 3})).reshaped({5, 2});
  ScoreConfig c;
  c.inversion_iters = 10;
  const LatentCode code = invert_latent_from(p.generator, x, z0, c);
  EXPECT_NEAR(code.err, 0.0, 1e-12);
  EXPECT_EQ(code.z, z0);
}

TEST(Inversion, ZeroIterationsReturnsPriorDraw) {
  const NetworkParams p = init_params(tiny_net(), 4);
  std::mt19937_64 rng(4);
  const Tensor z0 = sample_latent(rng, 1, 5, 3).reshaped({5, 3});
  const Tensor x = sample_latent(rng, 1, 5, 2).reshaped({5, 2});
  ScoreConfig c;
  c.inversion_iters = 0;
  const LatentCode code = invert_latent_from(p.generator, x, z0, c);
  EXPECT_EQ(code.z, z0);
  EXPECT_EQ(code.iterations, 0u);
  ASSERT_EQ(code.err_trace.size(), 1u);
  const Tensor y = generate(p.generator, z0.reshaped({1, 5, 3}));
  EXPECT_NEAR(code.err, 1.0 - simi(x.data(), y.data()), 1e-12);
}

TEST(Inversion, BestSoFarNeverIncreasesAndIsReturned) {
  const NetworkParams p = init_params(tiny_net(), 6);
  std::mt19937_64 rng(6);
  const Tensor x = sample_latent(rng, 1, 7, 2).reshaped({7, 2});
  ScoreConfig c;
  c.inversion_iters = 40;
  c.inversion_lr = 0.05;
  const LatentCode code = invert_latent(p.generator, x, c, 11);
  ASSERT_FALSE(code.err_trace.empty());
  EXPECT_DOUBLE_EQ(code.err, *std::min_element(code.err_trace.begin(), code.err_trace.end()));
  EXPECT_LT(code.err, code.err_trace.front());
  EXPECT_GE(code.err, 0.0);
  EXPECT_LE(code.err, 2.0);
  const Tensor y = generate(p.generator, code.z.reshaped({1, 7, 3}));
  EXPECT_NEAR(code.err, 1.0 - simi(x.data(), y.data()), 1e-12);
}

TEST(Inversion, BatchedMatchesSingleWindow) {
  const NetworkParams p = init_params(tiny_net(), 8);
  std::mt19937_64 rng(8);
  const Tensor xs = sample_latent(rng, 3, 5, 2);
  ScoreConfig c;
  c.inversion_iters = 15;
  const std::vector<std::uint64_t> seeds{window_seed(1, 0), window_seed(1, 1), window_seed(1, 2)};
  const std::vector<LatentCode> batch = invert_batch(p.generator, xs, seeds, c);
  for (std::size_t b = 0; b < 3; ++b) {
    const Tensor x({5, 2}, std::vector<double>(xs.data().begin() + b * 10, xs.data().begin() + (b + 1) * 10));
    const LatentCode single = invert_latent(p.generator, x, c, seeds[b]);
    EXPECT_EQ(single.z, batch[b].z);
    EXPECT_EQ(single.err, batch[b].err);
  }
  EXPECT_NE(window_seed(1, 0), window_seed(1, 1));
  EXPECT_NE(window_seed(1, 0), window_seed(2, 0));
}

TEST(Inversion, ShapeMismatchAndZeroWindow) {
  const NetworkParams p = init_params(tiny_net(), 1);
  ScoreConfig c;
  EXPECT_THROW(invert_latent(p.generator, Tensor({5, 3}), c, 1), ShapeError);
  EXPECT_THROW(invert_latent(p.generator, Tensor({5, 2}), c, 1), DomainError);
}

TEST(Dire, SingleAndPairedCoverage) {
  const data::WindowSet one = data::make_windows(ramp(4), 4, 1);
  const std::vector<double> l1{2.5};
  EXPECT_EQ(dire_score(l1, one).values, std::vector<double>(4, 2.5));

  const data::WindowSet two = data::make_windows(ramp(3), 2, 1);  // t = 1 covered by both
  const std::vector<double> l2{1.0, 3.0};
  const DireScores d = dire_score(l2, two);
  EXPECT_EQ(d.values, (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(d.counts, (std::vector<std::size_t>{1, 2, 1}));
}

TEST(Dire, UncoveredTailAndErrors) {
  const data::WindowSet w = data::make_windows(ramp(10), 4, 3);  // origins 0, 3, 6
  const DireScores d = dire_score(std::vector<double>{1.0, 2.0, 3.0}, w);
  EXPECT_EQ(d.covered_count(), 10u);
  const data::WindowSet gap = data::make_windows(ramp(10), 2, 3);  // 2, 5, 8 and 9 uncovered
  const DireScores g = dire_score(std::vector<double>{1.0, 2.0, 3.0}, gap);
  EXPECT_FALSE(g.covered(2));
  EXPECT_FALSE(g.covered(9));
  EXPECT_EQ(g.covered_count(), 6u);
  EXPECT_THROW(dire_score(std::vector<double>{1.0}, w), ShapeError);
}

TEST(Dire, MatchesExhaustiveEnumerationExactly) {
  std::mt19937_64 rng(2024);
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t length = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const std::size_t sw = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(10, length))(rng);
    const std::size_t stride = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const data::WindowSet w = data::make_windows(ramp(length), sw, stride);
    std::vector<double> losses(w.count());
    for (double& v : losses) v = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    EXPECT_EQ(dire_score(losses, w).values, brute_force_dire(losses, w)) << "instance " << instance;
  }
}

TEST(Dire, InteriorStrideOneCountEqualsWindowLength) {
  const data::WindowSet w = data::make_windows(ramp(40), 7, 1);
  const DireScores d = dire_score(std::vector<double>(w.count(), 1.0), w);
  for (std::size_t t = 6; t + 6 < 40; ++t) EXPECT_EQ(d.counts[t], 7u);
}

DireScores scores_from(std::vector<double> values) {
  DireScores d;
  d.counts.assign(values.size(), 1);
  d.values = std::move(values);
  return d;
}

TEST(Label, BoundaryAndZero) {
  const Labels l = label(scores_from({0.0, 1.0, 1.0, 2.0, 5.0}), 1.0);
  EXPECT_EQ(l.scale, 1.0);
  EXPECT_EQ(l.labels, (std::vector<int>{0, 0, 0, 1, 1}));
  EXPECT_EQ(l.p_hat[0], 1.0);
  EXPECT_NEAR(l.p_hat[3], std::exp(-2.0), 1e-15);
  EXPECT_NEAR(-std::log(l.p_hat[4]), l.ratio[4], 1e-12);
}

TEST(Label, HugeThresholdFlagsNothing) {
  std::mt19937_64 rng(3);
  std::vector<double> v(100);
  for (double& x : v) x = std::exponential_distribution<double>(1.0)(rng);
  const Labels l = label(scores_from(v), 1e9);
  EXPECT_EQ(std::count(l.labels.begin(), l.labels.end(), 1), 0);
}

TEST(Label, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<std::size_t>(1, 40)(rng));
    for (double& x : v) x = std::uniform_real_distribution<double>(0.01, 10.0)(rng);
    const double c = std::uniform_real_distribution<double>(0.1, 100.0)(rng);
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= c;
    const double tau = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
    EXPECT_EQ(label(scores_from(v), tau).labels, label(scores_from(scaled), tau).labels);
  }
}

TEST(Label, UncoveredTimestepsAreIgnoredAndAllUncoveredFails) {
  DireScores d = scores_from({1.0, 0.0, 3.0});
  d.counts[1] = 0;
  const Labels l = label(d, 1.0);
  EXPECT_EQ(l.scale, 2.0);
  EXPECT_EQ(l.labels[1], 0);
  d.counts.assign(3, 0);
  EXPECT_THROW(label(d, 1.0), DomainError);
  EXPECT_THROW(label(scores_from({1.0, NAN}), 1.0), DomainError);
}

TEST(ScoreWindows, ProducesOneRecordPerWindowDeterministically) {
  const NetworkParams p = init_params(tiny_net(), 5);
  data::SynthSpec spec;
  spec.features = 2;
  spec.length = 30;
  const data::WindowSet w = data::make_windows(data::synth_dataset(spec, 1).series, 6, 4);
  ScoreConfig c;
  c.inversion_iters = 5;
  c.seed = 9;
  const WindowScores a = score_windows(p, w, c, 2), b = score_windows(p, w, c, 256);
  ASSERT_EQ(a.ad_loss.size(), w.count());
  EXPECT_EQ(a.ad_loss, b.ad_loss);
  for (std::size_t j = 0; j < w.count(); ++j) {
    EXPECT_DOUBLE_EQ(a.ad_loss[j], ad_loss(a.rec[j], a.dis[j], 12, c));
    EXPECT_DOUBLE_EQ(a.dis[j], dis_score(a.d_raw[j]));
  }
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), DomainError);
}

}  // namespace
}  // namespace mimgan::detect
