// Copyright 2026 The dpglm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpglm/experiment.h"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

namespace dpglm {
namespace {

namespace fs = std::filesystem;

constexpr char kSmall[] = R"(
[experiment]
name = "small"
algorithm = "jdp"
T = 400
seeds = [1, 2, 3]

[instance]
d = 3
K = 10
S = 2.0
link = "probit"

[algorithm]
eps = 8.0
delta = 0.02
lambda = 150.0
beta = 0.1
gamma_lambda_min_frac = 1.2
count1_cutoff = 2
count2_cutoff = 3
pgd_iterations = 20
)";

fs::path TempDir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("dpglm_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ErrorOf(const std::string& toml) {
  try {
    ParseExperimentToml(toml, "cfg.toml");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesSections) {
  const ExperimentConfig cfg = ParseExperimentToml(kSmall);
  EXPECT_EQ(cfg.name, "small");
  EXPECT_EQ(cfg.horizon, 400);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(cfg.recipe.K, 10);
  EXPECT_EQ(cfg.recipe.link, LinkKind::kProbit);
  EXPECT_EQ(*cfg.jdp.lambda, 150.0);
  EXPECT_EQ(*cfg.shuffle.lambda, 150.0);
  EXPECT_EQ(*cfg.jdp.count1_cutoff, 2.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(ErrorOf("[experiment]\nT = 10\nbogus = 1\n").find("cfg.toml:3"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\n\n[nope]\n").find("cfg.toml:3"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\nT = \"x\"\n").find("cfg.toml:2"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\nT = [\n").find("cfg.toml:"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[experiment]\nalgorithm = \"sgd\"\n").find("cfg.toml:2"),
            std::string::npos);
}

TEST(Config, Validation) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  cfg.seeds = {};
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg.seeds = {1, 1};
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg.seeds = {1};
  cfg.workers = 0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* f : {"table2_k18.toml", "table2_k56.toml",
                        "table2_k222.toml", "shuffle_logistic.toml"}) {
    EXPECT_NO_THROW(LoadExperimentConfig(std::string(DPGLM_SOURCE_DIR) +
                                         "/configs/" + f))
        << f;
  }
}

TEST(Run, ByteIdenticalReruns) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  const fs::path a = TempDir("a"), b = TempDir("b");
  cfg.out_dir = a.string();
  RunExperiment(cfg);
  cfg.out_dir = b.string();
  cfg.workers = 3;
  RunExperiment(cfg);
  for (const char* f : {"small_seed1.csv", "small_seed2.csv", "small_seed3.csv",
                        "small_trace.csv", "small_seed2.json"}) {
    EXPECT_EQ(ReadFile((a / f).string()), ReadFile((b / f).string())) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, SummaryAndReplayAgree) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  const fs::path dir = TempDir("replay");
  cfg.out_dir = dir.string();
  const ExperimentResult r = RunExperiment(cfg);
  EXPECT_TRUE(r.summary["pass"].get<bool>());
  EXPECT_EQ(r.summary["runs"], 3);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : r.summary["per_seed"]) {
    pairs.push_back({p["csv"].get<std::string>(), p["sidecar"].get<std::string>()});
  }
  const nlohmann::json replay = ReplayTranscripts(pairs);
  EXPECT_EQ(replay["mean_regret"].get<double>(),
            r.summary["mean_regret"].get<double>());
  EXPECT_EQ(replay["std_regret"].get<double>(),
            r.summary["std_regret"].get<double>());
  const std::string trace = ReadFile((dir / "small_trace.csv").string());
  EXPECT_EQ(trace.rfind("round,mean_cumulative_regret,std_cumulative_regret\n", 0),
            0u);
  fs::remove_all(dir);
}

TEST(Run, NoiseOffJdpEqualsRarelySwitching) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  cfg.seeds = {4};
  cfg.channel = ChannelMode::kNoiseOff;
  const ExperimentResult jdp = RunExperiment(cfg);
  cfg.algorithm = Algorithm::kRsNonprivate;
  const ExperimentResult rs = RunExperiment(cfg);
  EXPECT_EQ(RoundsToCsv(*jdp.outcomes[0].transcript),
            RoundsToCsv(*rs.outcomes[0].transcript));
  EXPECT_EQ(jdp.summary["mean_regret"], rs.summary["mean_regret"]);
  EXPECT_EQ(jdp.summary["switches"], rs.summary["switches"]);
}

TEST(Run, FailingSeedsAreRecorded) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  cfg.algorithm = Algorithm::kShuffle;
  cfg.shuffle.eps = 1.0;
  cfg.shuffle.lambda = 1.0;  // lambda_min is negative on the noisy channel
  const ExperimentResult r = RunExperiment(cfg);
  EXPECT_EQ(r.summary["failures"].size(), 3u);
  EXPECT_FALSE(r.summary["pass"].get<bool>());
}

TEST(Summary, ViolationsBlockPass) {
  ExperimentConfig cfg = ParseExperimentToml(kSmall);
  cfg.seeds = {1};
  ExperimentResult r = RunExperiment(cfg);
  ASSERT_TRUE(r.summary["pass"].get<bool>());
  r.outcomes[0].violations.push_back("switch count 99 exceeds bound 3");
  EXPECT_FALSE(SummarizeOutcomes(r.outcomes)["pass"].get<bool>());
}

nlohmann::json Fake(const std::string& label, double eps, const std::string& col,
                    double kappa, double mean, double sd) {
  return {{"label", label},       {"algorithm", label}, {"eps", eps},
          {"instance_label", col}, {"kappa", kappa},    {"mean_regret", mean},
          {"std_regret", sd}};
}

TEST(Compare, TableAndFlags) {
  const std::vector<nlohmann::json> s = {
      Fake("glm_ucb", 0, "k18", 18, 100, 5), Fake("glm_ucb", 0, "k222", 222, 200, 5),
      Fake("jdp", 8, "k18", 18, 300, 30),    Fake("jdp", 8, "k222", 222, 310, 30),
      Fake("jdp", 4, "k18", 18, 700, 50),    Fake("jdp", 4, "k222", 222, 690, 50)};
  const CompareResult r = CompareReport(s);
  EXPECT_NE(r.table.find("glm_ucb"), std::string::npos);
  EXPECT_TRUE(r.flags["rows"]["glm_ucb"]["increasing_in_kappa"].get<bool>());
  EXPECT_TRUE(r.flags["rows"]["jdp eps=8"]["flat_within_10pct"].get<bool>());
  EXPECT_TRUE(r.flags["eps_trend"]["jdp"]["non_increasing_in_eps_within_pooled_std"]
                  .get<bool>());

  std::vector<nlohmann::json> bad = s;
  bad[5] = Fake("jdp", 4, "k56", 56, 690, 50);
  EXPECT_THROW(CompareReport(bad), std::invalid_argument);
  bad = s;
  bad.push_back(Fake("jdp", 4, "k18", 18, 1, 1));
  EXPECT_THROW(CompareReport(bad), std::invalid_argument);
  EXPECT_THROW(CompareReport({}), std::invalid_argument);
}

TEST(Compare, SingleRow) {
  const CompareResult r = CompareReport(
      {Fake("jdp", 8, "k18", 18, 300, 30), Fake("jdp", 8, "k56", 56, 320, 30)});
  EXPECT_EQ(std::count(r.table.begin(), r.table.end(), '\n'), 2);
}

}  // namespace
}  // namespace dpglm
