#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dpfed/config.hpp"
#include "dpfed/error.hpp"

namespace dpfed::config {
namespace {

const char* kFull = R"(# comment
[model]
hidden = 64, 32
activation = tanh
learning_rate = 0.01
batch_size = 128

[dp]
mechanism = gaussian
epsilon = 0.5
delta = 1e-6
clip_norm = 2
batch_fraction = 0.25
delta_slack = 1e-6

[federation]
clusters = 10
rounds = 200
per_cluster = 500
seed = 99
eval_every = 5
tail_window = 50
per_cluster_eval = true
normalization = per_cluster

[data]
source = synthetic
separation = 2.5
train_size = 6000
test_size = 1000
seed = 3
)";

std::string error_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesEveryKey) {
  const auto file = parse_config(kFull);
  const auto& c = file.experiment;
  EXPECT_EQ(c.shape.sizes, (std::vector<std::size_t>{21, 64, 32, 5}));
  EXPECT_EQ(c.activation, model::Activation::kTanh);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_EQ(c.mechanism, dp::Mechanism::kGaussian);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_EQ(c.delta, 1e-6);
  EXPECT_EQ(c.clip_norm, 2.0);
  EXPECT_EQ(c.batch_fraction, 0.25);
  EXPECT_EQ(c.delta_slack, 1e-6);
  EXPECT_EQ(c.clusters, 10u);
  EXPECT_EQ(c.rounds, 200u);
  EXPECT_EQ(c.per_cluster, 500u);
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_EQ(c.eval_every, 5u);
  EXPECT_EQ(c.tail_window, 50u);
  EXPECT_TRUE(c.per_cluster_eval);
  EXPECT_EQ(c.normalization, federation::Normalization::kPerCluster);
  EXPECT_EQ(c.data.kind, federation::DataSource::Kind::kSynthetic);
  EXPECT_EQ(c.data.separation, 2.5);
  EXPECT_EQ(c.data.train_size, 6000u);
  EXPECT_EQ(c.data.test_size, 1000u);
  EXPECT_EQ(c.data.seed, 3u);
  EXPECT_FALSE(file.sweep.has_value());
}

TEST(Config, EmptyFileGivesDefaults) {
  const auto c = parse_config("").experiment;
  const federation::ExperimentConfig d;
  EXPECT_EQ(render_config(c), render_config(d));
  EXPECT_EQ(c.shape.parameter_count(), 19973u);
}

TEST(Config, RenderRoundTrips) {
  const auto c = parse_config(kFull).experiment;
  const std::string text = render_config(c);
  EXPECT_EQ(render_config(parse_config(text).experiment), text);
  EXPECT_NE(text.find("learning_rate = 0.01\n"), std::string::npos) << text;
}

TEST(Config, InfiniteEpsilonMeansNoNoise) {
  const auto c = parse_config("[dp]\nmechanism = gaussian\nepsilon = inf\n").experiment;
  EXPECT_TRUE(std::isinf(c.epsilon));
  EXPECT_EQ(c.effective_mechanism(), dp::Mechanism::kNone);
  EXPECT_EQ(parse_real("inf", "x"), INFINITY);
  EXPECT_THROW(parse_real("1.5abc", "x"), ValidationError);
  EXPECT_THROW(parse_unsigned("-3", "x"), ValidationError);
}

TEST(Config, NegativeEpsilonIsANamedError) {
  const auto msg = error_of("[dp]\nepsilon = -1\n");
  EXPECT_NE(msg.find("dp.epsilon"), std::string::npos) << msg;
}

TEST(Config, UnknownKeysAndSectionsAreNamed) {
  EXPECT_NE(error_of("[dp]\nepsilonn = 1\n").find("dp.epsilonn"), std::string::npos);
  EXPECT_NE(error_of("[training]\nrounds = 1\n").find("training"), std::string::npos);
  EXPECT_NE(error_of("[model]\nbatch_size = many\n").find("model.batch_size"), std::string::npos);
  EXPECT_NE(error_of("[dp]\nmechanism = exponential\n").find("dp.mechanism"), std::string::npos);
  EXPECT_NE(error_of("[federation]\nnormalization = zscore\n").find("federation.normalization"),
            std::string::npos);
}

TEST(Config, MalformedIniReportsLine) {
  try {
    parse_config("[dp]\nepsilon = 1\nthis line is broken\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, SweepSection) {
  const auto file = parse_config(
      "[sweep]\nmechanisms = gaussian, laplace\nepsilons = 0.01, 0.5, inf\nclusters = 3, 10\n"
      "repetitions = 3\n");
  ASSERT_TRUE(file.sweep.has_value());
  const auto& s = *file.sweep;
  EXPECT_EQ(s.mechanisms,
            (std::vector<dp::Mechanism>{dp::Mechanism::kGaussian, dp::Mechanism::kLaplace}));
  ASSERT_EQ(s.epsilons.size(), 3u);
  EXPECT_TRUE(std::isinf(s.epsilons[2]));
  EXPECT_EQ(s.cluster_counts, (std::vector<std::size_t>{3, 10}));
  EXPECT_EQ(s.repetitions, 3u);

  const auto defaulted = parse_config("[sweep]\nrepetitions = 2\n").sweep;
  ASSERT_TRUE(defaulted.has_value());
  EXPECT_EQ(defaulted->epsilons, (std::vector<double>{0.5}));
  EXPECT_EQ(defaulted->cluster_counts, (std::vector<std::size_t>{3}));
  EXPECT_NE(error_of("[sweep]\nrepetitions = 0\n").find("sweep.repetitions"), std::string::npos);
}

TEST(Config, CsvPathsResolveAgainstConfigDirectory) {
  const auto c = parse_config("[data]\nsource = csv\ntrain = a/train.csv\ntest = /abs/test.csv\n"
                              "categorical = numeric\n",
                              "/cfg/dir")
                     .experiment;
  EXPECT_EQ(c.data.train_path, "/cfg/dir/a/train.csv");
  EXPECT_EQ(c.data.test_path, "/abs/test.csv");
  EXPECT_EQ(c.data.categorical, data::CategoricalEncoding::kNumeric);
  EXPECT_NE(error_of("[data]\nsource = csv\n").find("data.train"), std::string::npos);
}

TEST(Config, LoadFromDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "dpfed_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "c.ini";
  std::ofstream(path) << "[federation]\nclusters = 5\n";
  EXPECT_EQ(load_config(path.string()).experiment.clusters, 5u);
  EXPECT_THROW(load_config((dir / "missing.ini").string()), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dpfed::config
