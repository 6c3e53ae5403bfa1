#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"

namespace mimgan {
namespace {

namespace fs = std::filesystem;

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mimgan_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // 200-step synthetic series with a label column.
  std::string synth_csv(const std::string& name, std::size_t length = 200, std::uint64_t seed = 1) {
    data::SynthSpec spec;
    spec.features = 2;
    spec.length = length;
    pipeline::run_synth(spec, seed, path(name));
    return path(name);
  }

  ResolvedConfig quick(const std::string& data, const std::string& out, KeyValues extra = {}) {
    ConfigSources s;
    s.flags = {{"data", data},     {"out", out},          {"seq_length", "10"}, {"epochs", "1"},
               {"batch_size", "4"}, {"g_hidden", "4"},     {"d_hidden", "4"},    {"latent_dim", "2"},
               {"seed", "5"},       {"inversion_iters", "3"}, {"label_column", "label"}};
    for (auto& [k, v] : extra) s.flags[k] = v;
    return resolve_config(s);
  }

  fs::path dir_;
};

TEST(KeyValueText, ParsesCommentsAndDuplicates) {
  const auto kv = io::parse_kv("# header\nlr_g = 0.1\n\n  epochs=3  # trailing\nlr_g = 0.2\n");
  EXPECT_EQ(kv.at("lr_g"), "0.2");
  EXPECT_EQ(kv.at("epochs"), "3");
  EXPECT_THROW(io::parse_kv("no equals sign\n"), IoError);
  EXPECT_THROW(io::parse_kv(" = 4\n"), IoError);
  EXPECT_EQ(io::parse_kv(io::format_kv(kv)), kv);
}

TEST(Config, DefaultsMirrorPublishedBestRow) {
  const ResolvedConfig r = resolve_config({});
  EXPECT_EQ(r.config.seq_length, 90u);
  EXPECT_EQ(r.config.train.batch_size, 512u);
  EXPECT_EQ(r.config.train.lr_d, 0.0005);
  EXPECT_EQ(r.config.train.lr_g, 0.0005);
  EXPECT_EQ(r.origin.at("lr_g"), "default");
}

TEST(Config, UnknownKeyAndBadValueNameTheKeyAndLayer) {
  ConfigSources s;
  s.file = {{"lr_gg", "1"}};
  try {
    resolve_config(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lr_gg"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("file"), std::string::npos);
  }
  s.file.clear();
  s.flags = {{"epochs", "three"}};
  EXPECT_THROW(resolve_config(s), ConfigError);
  s.flags = {{"alpha", "1.0"}};
  EXPECT_THROW(resolve_config(s), ConfigError);
  s.flags = {{"lr_d", "-1"}};
  EXPECT_THROW(resolve_config(s), ConfigError);
}

TEST(Config, EnvironmentNamesArePrefixedUppercaseKeys) {
  const KeyValues env = env_overrides([](const char* name) -> const char* {
    if (std::strcmp(name, "MIMGAN_LR_G") == 0) return "0.001";
    if (std::strcmp(name, "MIMGAN_BATCH_SIZE") == 0) return "16";
    return nullptr;
  });
  EXPECT_EQ(env, (KeyValues{{"lr_g", "0.001"}, {"batch_size", "16"}}));
}

// Each key takes the value of the highest layer that sets it.
TEST(Config, PrecedenceOverRandomLayerSubsets) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> keys = {
      {"epochs", {"3", "4", "5"}},      {"batch_size", {"8", "16", "32"}}, {"lr_g", {"0.1", "0.2", "0.3"}},
      {"lr_d", {"0.01", "0.02", "0.03"}}, {"seq_length", {"20", "30", "40"}}, {"tau", {"1.5", "2.5", "3.5"}},
      {"alpha", {"0.2", "0.4", "0.6"}},  {"seed", {"7", "8", "9"}},         {"out", {"a", "b", "c"}}};
  const RunConfig defaults;
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    ConfigSources s;
    KeyValues* layers[] = {&s.env, &s.file, &s.flags};
    KeyValues expected = defaults.to_kv();
    std::map<std::string, std::string> origin;
    for (const auto& [key, values] : keys) {
      origin[key] = "default";
      for (int layer = 0; layer < 3; ++layer) {
        if (rng() % 2) {
          (*layers[layer])[key] = values[static_cast<std::size_t>(layer)];
          expected[key] = values[static_cast<std::size_t>(layer)];
          origin[key] = layer == 0 ? "env" : layer == 1 ? "file" : "flag";
        }
      }
    }
    const ResolvedConfig r = resolve_config(s);
    const KeyValues got = r.config.to_kv();
    for (const auto& [key, values] : keys) {
      RunConfig probe;
      probe.set(key, expected[key]);
      EXPECT_EQ(got.at(key), probe.to_kv().at(key)) << key << " trial " << trial;
      EXPECT_EQ(r.origin.at(key), origin[key]) << key;
    }
  }
}

TEST(Config, EchoListsEveryKeyWithOrigin) {
  ConfigSources s;
  s.file = {{"epochs", "7"}};
  s.flags = {{"tau", "2"}};
  const std::string text = format_resolved(resolve_config(s));
  EXPECT_NE(text.find("epochs = 7  # file"), std::string::npos) << text;
  EXPECT_NE(text.find("tau = 2  # flag"), std::string::npos) << text;
  EXPECT_NE(text.find("lr_g = 5e-04  # default"), std::string::npos) << text;
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_EQ(lines, RunConfig::keys().size());
}

Checkpoint sample_checkpoint() {
  NetConfig net;
  net.features = 2;
  net.latent_dim = 3;
  net.g_hidden = 4;
  net.d_hidden = 4;
  TrainConfig tc;
  tc.seed = 8;
  Checkpoint c;
  c.config = {{"seed", "8"}, {"note", "x = y"}};
  c.norm = data::NormStats{{-1.5, 0.0}, {2.0, 1e-300}};
  c.state = init_train_state(net, tc);
  c.state.history.push_back({0, 3.2974425414002564, -0.1, 2});
  c.state.step = 1;
  c.state.epoch_rolling = {3.5};
  c.state.params.generator.head_b.mutable_data()[0] = std::nextafter(0.1, 1.0);
  c.state.rng.discard(17);
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint c = sample_checkpoint();
  const std::string bytes = encode_checkpoint(c);
  EXPECT_EQ(bytes.substr(0, 8), "MIMGANCK");
  Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.norm->max[1], 1e-300);
  EXPECT_EQ(back.state.history[0].d_loss, 3.2974425414002564);
  EXPECT_EQ(back.state.params.generator.head_b[0], std::nextafter(0.1, 1.0));
  std::mt19937_64 rng = c.state.rng;
  EXPECT_EQ(back.state.rng(), rng());
}

TEST(Checkpoint, VersionMismatchIsRejected) {
  std::string bytes = encode_checkpoint(sample_checkpoint());
  bytes[8] = 2;  // u32 little-endian version follows the magic
  EXPECT_THROW(decode_checkpoint(bytes), VersionError);
}

TEST(Checkpoint, TruncatedOrForeignInputFailsToLoad) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, cut)), IoError) << cut;
  }
  EXPECT_THROW(decode_checkpoint("NOTACKPT" + bytes.substr(8)), IoError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), IoError);
}

TEST_F(Workspace, AtomicWriteLeavesNoTempFilesAndReplacesWhole) {
  const std::string p = path("file.txt");
  io::atomic_write(p, "first version, longer");
  io::atomic_write(p, "second");
  EXPECT_EQ(io::read_file(p), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++entries;
  EXPECT_EQ(entries, 1u);
  io::atomic_write(path("nested/dir/file.txt"), "x");  // parents are created
  EXPECT_EQ(io::read_file(path("nested/dir/file.txt")), "x");
  EXPECT_THROW(io::atomic_write(path("file.txt/under_a_file"), "x"), IoError);
}

TEST_F(Workspace, SaveLoadCheckpointFile) {
  const Checkpoint c = sample_checkpoint();
  save_checkpoint(path("a.ckpt"), c);
  EXPECT_EQ(encode_checkpoint(load_checkpoint(path("a.ckpt"))), encode_checkpoint(c));
  EXPECT_THROW(load_checkpoint(path("none.ckpt")), IoError);
}

TEST_F(Workspace, TrainSmokeWritesOneCheckpoint) {
  const std::string data = synth_csv("train.csv");
  const pipeline::TrainOutcome o = pipeline::run_train(quick(data, path("out")));
  EXPECT_EQ(o.checkpoints_written, 1u);
  EXPECT_EQ(o.epochs, 1u);
  EXPECT_TRUE(fs::exists(o.checkpoint));
  EXPECT_TRUE(fs::exists(o.config_echo));
  const std::string log = io::read_file(o.metrics_log);
  EXPECT_EQ(log.rfind("step,d_loss,g_objective,clamp_events\n", 0), 0u);
  std::size_t lines = 0;
  for (char c : log) lines += c == '\n';
  EXPECT_EQ(lines, o.steps + 1);
  const Checkpoint c = load_checkpoint(o.checkpoint);
  EXPECT_EQ(c.state.params.config.features, 2u);  // inferred from the data
  EXPECT_TRUE(c.norm.has_value());
}

TEST_F(Workspace, TrainTwiceIsByteIdentical) {
  const std::string data = synth_csv("train.csv");
  const auto a = pipeline::run_train(quick(data, path("out"), {{"epochs", "2"}}));
  const std::string ckpt = io::read_file(a.checkpoint), log = io::read_file(a.metrics_log);
  fs::remove_all(path("out"));
  const auto b = pipeline::run_train(quick(data, path("out"), {{"epochs", "2"}}));
  EXPECT_EQ(io::read_file(b.checkpoint), ckpt);
  EXPECT_EQ(io::read_file(b.metrics_log), log);
}

TEST_F(Workspace, ResumeReproducesUninterruptedRun) {
  const std::string data = synth_csv("train.csv");
  const auto straight = pipeline::run_train(quick(data, path("out"), {{"epochs", "3"}}));
  const std::string ckpt = io::read_file(straight.checkpoint), log = io::read_file(straight.metrics_log);
  fs::remove_all(path("out"));
  const auto first = pipeline::run_train(quick(data, path("out"), {{"epochs", "1"}}));
  const std::string saved = path("epoch1.ckpt");
  fs::copy_file(first.checkpoint, saved);
  const auto resumed = pipeline::run_train(quick(data, path("out"), {{"epochs", "3"}}), saved);
  EXPECT_EQ(resumed.epochs, 3u);
  EXPECT_EQ(io::read_file(resumed.checkpoint), ckpt);
  EXPECT_EQ(io::read_file(resumed.metrics_log), log);
}

TEST_F(Workspace, TrainInputErrors) {
  EXPECT_THROW(pipeline::run_train(quick(path("absent.csv"), path("out"))), ConfigError);
  const std::string data = synth_csv("train.csv");
  EXPECT_THROW(pipeline::run_train(quick(data, path("out"), {{"features", "3"}})), ConfigError);
  const auto first = pipeline::run_train(quick(data, path("out")));
  EXPECT_THROW(pipeline::run_train(quick(data, path("out"), {{"g_hidden", "5"}}), first.checkpoint), ConfigError);
}

TEST_F(Workspace, DetectWritesScoresAndEchoesWeights) {
  const std::string train = synth_csv("train.csv");
  const std::string test = synth_csv("test.csv", 120, 2);
  pipeline::run_train(quick(train, path("out")));
  const auto o = pipeline::run_detect(quick(test, path("out"), {{"alpha", "0.7"}, {"tau", "1e9"}}));
  EXPECT_EQ(std::count(o.labels.labels.begin(), o.labels.labels.end(), 1), 0);
  EXPECT_NE(o.summary.find("alpha: 0.7\n"), std::string::npos) << o.summary;
  EXPECT_NE(o.summary.find("beta: 0.3\n"), std::string::npos) << o.summary;
  EXPECT_NE(o.summary.find("NOT REPRODUCED"), std::string::npos);
  ASSERT_TRUE(o.metrics.has_value());
  const std::string scores = io::read_file(o.scores_path);
  EXPECT_EQ(scores.rfind("t,dire,p_hat,label\n", 0), 0u);
  std::size_t lines = 0;
  for (char c : scores) lines += c == '\n';
  EXPECT_EQ(lines, 121u);
  EXPECT_TRUE(fs::exists(o.windows_path));
  EXPECT_EQ(io::read_file(o.summary_path), o.summary);
}

TEST_F(Workspace, DetectRejectsForeignCheckpointVersion) {
  const std::string train = synth_csv("train.csv");
  const auto t = pipeline::run_train(quick(train, path("out")));
  std::string bytes = io::read_file(t.checkpoint);
  bytes[8] = 9;
  io::atomic_write(t.checkpoint, bytes);
  EXPECT_THROW(pipeline::run_detect(quick(train, path("out"))), VersionError);
}

TEST_F(Workspace, EvalReadsLabelColumns) {
  const std::string a = synth_csv("a.csv");
  const pipeline::EvalOutcome same = pipeline::run_eval(a, a);
  EXPECT_EQ(same.metrics.f1, 1.0);
  EXPECT_NE(same.report.find("f1: 1"), std::string::npos);
  EXPECT_NE(same.report.find("NOT REPRODUCED"), std::string::npos);
  const std::string shorter = synth_csv("b.csv", 100);
  EXPECT_THROW(pipeline::run_eval(a, shorter), ShapeError);
}

TEST_F(Workspace, SynthRejectsExcessContamination) {
  data::SynthSpec spec;
  spec.contamination = 0.6;
  EXPECT_THROW(pipeline::run_synth(spec, 1, path("x.csv")), ConfigError);
  EXPECT_FALSE(fs::exists(path("x.csv")));
}

}  // namespace
}  // namespace mimgan
