#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpfed/cli.hpp"
#include "dpfed/kernels.hpp"
#include "oracles.inc"

namespace dpfed::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dpfed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_data_lines(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
  return n;
}

const char* kSmallRun = R"([model]
hidden = 16
learning_rate = 0.05
batch_size = 64

[dp]
mechanism = gaussian
epsilon = 0.5
clip_norm = 0.5

[federation]
clusters = 4
rounds = 12
per_cluster = 150
seed = 5
tail_window = 5

[data]
train_size = 1000
test_size = 300
)";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dpfed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    saved_ = kernels::active_backend();
  }
  void TearDown() override {
    kernels::set_active_backend(saved_);
    fs::remove_all(dir_);
  }
  fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  fs::path dir_;
  kernels::Backend saved_ = kernels::Backend::kScalar;
};

TEST_F(CliTest, GenDataSizesAndReplay) {
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(invoke({"gen-data", "--out", a.string(), "--per-class", "10", "--test-per-class", "2"})
                .code,
            0);
  ASSERT_EQ(invoke({"gen-data", "--out", b.string(), "--per-class", "10", "--test-per-class", "2"})
                .code,
            0);
  const auto train = slurp(a / "train.csv");
  EXPECT_EQ(count_data_lines(train), 51u);
  EXPECT_EQ(count_data_lines(slurp(a / "test.csv")), 11u);
  EXPECT_EQ(train, slurp(b / "train.csv"));
  EXPECT_EQ(slurp(a / "test.csv"), slurp(b / "test.csv"));
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest.at("train_rows").get<std::size_t>(), 50u);
}

TEST_F(CliTest, GeneratedCsvFeedsARun) {
  const auto data = dir_ / "data";
  ASSERT_EQ(invoke({"gen-data", "--out", data.string(), "--per-class", "200", "--test-per-class",
                    "20"})
                .code,
            0);
  const auto cfg = write_config(
      "csv.ini", "[model]\nhidden = 8\nbatch_size = 32\n[federation]\nclusters = 2\nrounds = 3\n"
                 "per_cluster = 100\ntail_window = 2\n[data]\nsource = csv\n"
                 "train = data/train.csv\ntest = data/test.csv\ncategorical = numeric\n");
  const auto r = invoke({"run", "--config", cfg.string(), "--out", (dir_ / "out").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "metrics.csv"));
}

TEST_F(CliTest, RunIsDeterministicAcrossRepeatsAndThreads) {
  const auto cfg = write_config("run.ini", kSmallRun);
  const auto o1 = dir_ / "o1", o2 = dir_ / "o2", o8 = dir_ / "o8";
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", o1.string()}).code, 0);
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", o2.string(), "--threads", "1"}).code,
            0);
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", o8.string(), "--threads", "8"}).code,
            0);
  const auto m1 = slurp(o1 / "metrics.csv");
  EXPECT_EQ(count_data_lines(m1), 13u);
  EXPECT_EQ(m1, slurp(o2 / "metrics.csv"));
  EXPECT_EQ(m1, slurp(o8 / "metrics.csv"));
  EXPECT_EQ(slurp(o1 / "confusion.csv"), slurp(o8 / "confusion.csv"));
  EXPECT_EQ(slurp(o1 / "model.ckpt"), slurp(o8 / "model.ckpt"));
  EXPECT_NE(m1.find("# dpfed schema_version = 1"), std::string::npos);
  EXPECT_NE(m1.find("# dp.mechanism = gaussian"), std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(o1 / "summary.json"));
  EXPECT_EQ(summary.at("schema_version").get<int>(), 1);
  EXPECT_EQ(summary.at("records").get<std::size_t>(), 12u);
  EXPECT_TRUE(summary.at("budgets").contains("advanced"));

  const auto other = dir_ / "seed";
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", other.string(), "--seed", "6"}).code,
            0);
  EXPECT_NE(m1, slurp(other / "metrics.csv"));
}

TEST_F(CliTest, KernelBackendSelection) {
  const auto cfg = write_config("run.ini", kSmallRun);
  const auto r = invoke({"--kernels", "scalar", "run", "--config", cfg.string(), "--out",
                         (dir_ / "s").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(kernels::active_backend(), kernels::Backend::kScalar);
  EXPECT_EQ(invoke({"--kernels", "neon", "report", "--out", dir_.string()}).code, kExitValidation);
}

TEST_F(CliTest, ReportDescribesRunAndSweep) {
  const auto cfg = write_config("run.ini", kSmallRun);
  const auto o = dir_ / "o";
  ASSERT_EQ(invoke({"run", "--config", cfg.string(), "--out", o.string()}).code, 0);
  const auto r = invoke({"report", "--out", o.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("tail"), std::string::npos);
  EXPECT_NE(r.out.find("budget advanced"), std::string::npos);
  EXPECT_EQ(invoke({"report", "--out", (dir_ / "nothing").string()}).code, kExitIo);
}

TEST_F(CliTest, SweepWritesOneRowPerCell) {
  const auto cfg = write_config(
      "sweep.ini", std::string(kSmallRun) +
                       "\n[sweep]\nmechanisms = gaussian, laplace\nepsilons = 0.5, inf\n"
                       "clusters = 2, 3\nrepetitions = 2\n");
  const auto o = dir_ / "sw";
  const auto r = invoke({"sweep", "--config", cfg.string(), "--out", o.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(o / "sweep.csv");
  EXPECT_EQ(count_data_lines(text), 1u + 2 * 2 * 2 * 2);
  EXPECT_EQ(text.find("wallclock"), std::string::npos);
  EXPECT_EQ(count_data_lines(slurp(o / "sweep_timing.csv")), 17u);
  EXPECT_EQ(invoke({"report", "--out", o.string()}).code, 0);

  const auto again = dir_ / "sw2";
  ASSERT_EQ(invoke({"sweep", "--config", cfg.string(), "--out", again.string()}).code, 0);
  EXPECT_EQ(text, slurp(again / "sweep.csv"));
  EXPECT_EQ(invoke({"sweep", "--config", write_config("plain.ini", kSmallRun).string()}).code,
            kExitValidation);
}

TEST_F(CliTest, AccountantJson) {
  const auto r = invoke({"accountant", "--epsilon", "0.5", "--delta", "1e-5", "--clusters", "3",
                         "--rounds", "1000", "--delta-slack", "1e-5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double adv = j.at("advanced").at("epsilon_bar").get<double>();
  EXPECT_NEAR(adv, oracle::kAdvancedEpsBar, 1e-12 * oracle::kAdvancedEpsBar);
  EXPECT_EQ(j.at("naive_sequential").at("epsilon_bar").get<double>(), 1500.0);
  EXPECT_EQ(j.at("parallel").at("epsilon_bar").get<double>(), 0.5);

  const auto bad = invoke({"accountant", "--clusters", "100"});
  EXPECT_EQ(bad.code, kExitValidation);
  EXPECT_NE(bad.err.find("advanced"), std::string::npos);

  const auto cfg = write_config("acct.ini", "[dp]\nepsilon = 1\n[federation]\nclusters = 2\n");
  const auto from_cfg = nlohmann::json::parse(invoke({"accountant", "--config", cfg.string()}).out);
  EXPECT_EQ(from_cfg.at("naive_sequential").at("epsilon_bar").get<double>(), 2000.0);
}

TEST_F(CliTest, ExitCodes) {
  const auto bad_eps = write_config("bad.ini", "[dp]\nepsilon = -1\n");
  const auto r = invoke({"run", "--config", bad_eps.string(), "--out", (dir_ / "x").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("dp.epsilon"), std::string::npos) << r.err;

  EXPECT_EQ(invoke({"run", "--config", (dir_ / "missing.ini").string()}).code, kExitIo);
  EXPECT_EQ(invoke({"run"}).code, kExitValidation);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);

  const auto diverge = write_config(
      "div.ini",
      "[model]\nhidden = 8\nlearning_rate = 1e300\n[dp]\nclip_norm = inf\n"
      "[federation]\nclusters = 2\nrounds = 5\nper_cluster = 50\n[data]\ntrain_size = 200\n"
      "test_size = 50\n");
  EXPECT_EQ(invoke({"run", "--config", diverge.string(), "--out", (dir_ / "d").string()}).code,
            kExitDivergence);
}

}  // namespace
}  // namespace dpfed::cli
