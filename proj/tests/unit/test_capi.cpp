// Exercises the shared library through its C header only, and the CLI as a
// separate process.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mimgan/mimgan.h"

namespace {

namespace fs = std::filesystem;

std::string take(mimgan_text* t) {
  if (!t) return {};
  std::string s(mimgan_text_data(t), mimgan_text_size(t));
  mimgan_text_free(t);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CApi : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mimgan_capi_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string synth(const std::string& name, const char* spec = "n = 2\nT = 200\n") {
    EXPECT_EQ(mimgan_synth(spec, 1, path(name).c_str(), nullptr), MIMGAN_OK) << mimgan_last_error();
    return path(name);
  }

  mimgan_config* quick_config(const std::string& data, const std::string& out) {
    mimgan_config* c = nullptr;
    EXPECT_EQ(mimgan_config_create(&c), MIMGAN_OK);
    const std::pair<const char*, std::string> sets[] = {
        {"data", data},     {"out", out},      {"seq_length", "10"}, {"epochs", "2"},
        {"batch_size", "8"}, {"g_hidden", "4"}, {"d_hidden", "4"},    {"latent_dim", "2"},
        {"seed", "3"},      {"inversion_iters", "3"}};
    for (const auto& [k, v] : sets) EXPECT_EQ(mimgan_config_set(c, k, v.c_str()), MIMGAN_OK) << k;
    return c;
  }

  // Runs the CLI and returns its exit status; stdout goes to `log`.
  int cli(const std::string& args, const std::string& log = "cli.log") const {
    const std::string cmd = std::string(MIMGAN_CLI_PATH) + " " + args + " > " + path(log) + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  fs::path dir_;
};

TEST(CApiBasics, VersionStatusNamesAndNullArguments) {
  EXPECT_STREQ(mimgan_version(), "1.0.0");
  EXPECT_EQ(mimgan_checkpoint_format(), 1u);
  EXPECT_STREQ(mimgan_status_name(MIMGAN_CONFIG), "configuration error");
  EXPECT_EQ(mimgan_config_create(nullptr), MIMGAN_INVALID_ARGUMENT);
  EXPECT_NE(std::string(mimgan_last_error()), "");
  mimgan_config_free(nullptr);
  mimgan_text_free(nullptr);
  mimgan_model_free(nullptr);
}

TEST(CApiBasics, ConfigLayersResolveByPrecedence) {
  mimgan_config* c = nullptr;
  ASSERT_EQ(mimgan_config_create(&c), MIMGAN_OK);
  mimgan_text* t = nullptr;
  ASSERT_EQ(mimgan_config_get(c, "batch_size", &t), MIMGAN_OK);
  EXPECT_EQ(take(t), "512");
  ASSERT_EQ(mimgan_config_set(c, "batch_size", "64"), MIMGAN_OK);
  ASSERT_EQ(mimgan_config_get(c, "batch_size", &t), MIMGAN_OK);
  EXPECT_EQ(take(t), "64");
  EXPECT_EQ(mimgan_config_set(c, "no_such_key", "1"), MIMGAN_CONFIG);
  EXPECT_NE(std::string(mimgan_last_error()).find("no_such_key"), std::string::npos);
  EXPECT_EQ(mimgan_config_get(c, "no_such_key", &t), MIMGAN_CONFIG);
  ASSERT_EQ(mimgan_config_dump(c, &t), MIMGAN_OK);
  EXPECT_NE(take(t).find("batch_size = 64  # flag"), std::string::npos);
  EXPECT_EQ(mimgan_config_load_file(c, "/nonexistent/file.conf"), MIMGAN_IO);
  mimgan_config_free(c);
}

TEST_F(CApi, FileLayerSitsBelowExplicitSets) {
  {
    std::ofstream(path("run.conf")) << "# run settings\nepochs = 9\ntau = 2.5\n";
  }
  mimgan_config* c = nullptr;
  ASSERT_EQ(mimgan_config_create(&c), MIMGAN_OK);
  ASSERT_EQ(mimgan_config_set(c, "epochs", "4"), MIMGAN_OK);
  ASSERT_EQ(mimgan_config_load_file(c, path("run.conf").c_str()), MIMGAN_OK);
  mimgan_text* t = nullptr;
  ASSERT_EQ(mimgan_config_get(c, "epochs", &t), MIMGAN_OK);
  EXPECT_EQ(take(t), "4");
  ASSERT_EQ(mimgan_config_get(c, "tau", &t), MIMGAN_OK);
  EXPECT_EQ(take(t), "2.5");
  mimgan_config_free(c);
}

TEST_F(CApi, TrainTwiceGivesIdenticalArtifactsAndModelLoads) {
  const std::string data = synth("train.csv");
  mimgan_config* c = quick_config(data, path("out"));
  mimgan_text* report = nullptr;
  ASSERT_EQ(mimgan_train(c, nullptr, &report), MIMGAN_OK) << mimgan_last_error();
  EXPECT_NE(take(report).find("checkpoint"), std::string::npos);
  const std::string ckpt = slurp(path("out/checkpoint.ckpt")), log = slurp(path("out/metrics.csv"));
  fs::remove_all(path("out"));
  ASSERT_EQ(mimgan_train(c, nullptr, nullptr), MIMGAN_OK) << mimgan_last_error();
  EXPECT_EQ(slurp(path("out/checkpoint.ckpt")), ckpt);
  EXPECT_EQ(slurp(path("out/metrics.csv")), log);

  mimgan_model* m = nullptr;
  ASSERT_EQ(mimgan_model_load(path("out/checkpoint.ckpt").c_str(), &m), MIMGAN_OK);
  mimgan_text* info = nullptr;
  ASSERT_EQ(mimgan_model_info(m, &info), MIMGAN_OK);
  EXPECT_NE(take(info).find("features"), std::string::npos);
  mimgan_model_free(m);
  EXPECT_EQ(mimgan_model_load(path("missing.ckpt").c_str(), &m), MIMGAN_IO);

  ASSERT_EQ(mimgan_config_set(c, "tau", "1e9"), MIMGAN_OK);
  mimgan_text* summary = nullptr;
  ASSERT_EQ(mimgan_detect(c, &summary), MIMGAN_OK) << mimgan_last_error();
  EXPECT_NE(take(summary).find("flagged: 0\n"), std::string::npos);
  mimgan_config_free(c);
}

TEST_F(CApi, TrainWithoutDataIsConfigError) {
  mimgan_config* c = quick_config(path("absent.csv"), path("out"));
  EXPECT_EQ(mimgan_train(c, nullptr, nullptr), MIMGAN_CONFIG);
  mimgan_config_free(c);
}

TEST_F(CApi, GradcheckAndSynthStatuses) {
  mimgan_text* report = nullptr;
  EXPECT_EQ(mimgan_gradcheck(2, 1, 1e-4, &report), MIMGAN_OK);
  EXPECT_NE(take(report).find("result: pass"), std::string::npos);
  EXPECT_EQ(mimgan_gradcheck(1, 1, 1e-30, &report), MIMGAN_NUMERIC);
  EXPECT_NE(take(report).find("result: fail"), std::string::npos);
  EXPECT_NE(mimgan_synth("contamination = 0.6\n", 1, path("x.csv").c_str(), nullptr), MIMGAN_OK);
  EXPECT_EQ(mimgan_synth("bogus = 1\n", 1, path("x.csv").c_str(), nullptr), MIMGAN_CONFIG);
}

TEST_F(CApi, CliExitCodes) {
  EXPECT_EQ(cli("--version"), 0);
  EXPECT_EQ(cli("train --data " + path("absent.csv") + " --out " + path("out")), 2);
  EXPECT_EQ(cli("train --set nokey=1 --data x"), 2);
  EXPECT_EQ(cli("train --config " + path("absent.conf")), 2);
  EXPECT_EQ(cli("synth --out " + path("bad.csv") + " --contamination 0.6"), 2);
  EXPECT_EQ(cli("gradcheck --seeds 2"), 0);
  EXPECT_EQ(cli("frobnicate"), 2);
}

TEST_F(CApi, CliSmokeTrainDetectEval) {
  const std::string data = path("series.csv");
  ASSERT_EQ(cli("synth --out " + data + " --features 2 --length 200 --seed 4"), 0);
  const std::string common = " --data " + data + " --out " + path("out") + " --label-column label" +
                             " --set g_hidden=4 --set d_hidden=4 --set latent_dim=2 --set inversion_iters=3";
  ASSERT_EQ(cli("train --epochs 1 --batch-size 4 --seq-length 10" + common, "train.log"), 0)
      << slurp(path("train.log"));
  EXPECT_TRUE(fs::exists(path("out/checkpoint.ckpt")));
  ASSERT_EQ(cli("detect --tau 1e9 --alpha 0.7" + common, "detect.log"), 0) << slurp(path("detect.log"));
  const std::string summary = slurp(path("out/summary.txt"));
  EXPECT_NE(summary.find("beta: 0.3\n"), std::string::npos) << summary;
  EXPECT_NE(summary.find("flagged: 0\n"), std::string::npos) << summary;

  ASSERT_EQ(cli("eval --pred " + data + " --truth " + data, "eval.log"), 0);
  EXPECT_NE(slurp(path("eval.log")).find("f1: 1\n"), std::string::npos) << slurp(path("eval.log"));
}

TEST_F(CApi, CliPrintConfigShowsOrigins) {
  {
    std::ofstream(path("run.conf")) << "epochs = 9\nlr_g = 0.002\n";
  }
  const std::string args = "train --print-config --config " + path("run.conf") + " --epochs 3 --data " +
                           path("absent.csv");
  EXPECT_EQ(cli(args, "print.log"), 2);
  const std::string out = slurp(path("print.log"));
  EXPECT_NE(out.find("epochs = 3  # flag"), std::string::npos) << out;
  EXPECT_NE(out.find("lr_g = 0.002  # file"), std::string::npos) << out;
  EXPECT_NE(out.find("no such file"), std::string::npos) << out;
}

}  // namespace
