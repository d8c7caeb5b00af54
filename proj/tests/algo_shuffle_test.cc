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

#include "dpglm/algo_shuffle.h"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "dpglm/experiment.h"
#include "dpglm/ledger_audit.h"

namespace dpglm {
namespace {

DesignMatrix Diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return DesignMatrix(m, 0.0);
}

TEST(Schedule, AlphaAndTruncation) {
  EXPECT_NEAR(DefaultAlpha(10000, 3), 464.159, 1e-3);
  EXPECT_NEAR(DefaultAlpha(10000, 3), std::pow(10000.0, 2.0 / 3.0), 1e-9);
  const BatchSchedule s = MakeBatchSchedule(10000, 3, 1, 1, 1, 3, std::nullopt,
                                            std::int64_t{100});
  ASSERT_EQ(s.lengths.size(), 3u);
  EXPECT_EQ(s.lengths[0], 100);
  EXPECT_EQ(s.lengths[1], 465);
  // Untruncated B_3 would be ceil(464.159 sqrt(465)) = 10010.
  EXPECT_EQ(std::ceil(s.alpha * std::sqrt(465.0)), 10010.0);
  EXPECT_EQ(s.lengths[2], 10000 - 100 - 465);
  EXPECT_EQ(s.Total(), 10000);
}

TEST(Schedule, WarmupFormula) {
  const double b1 = WarmupLength(4.0, 0.1, 1.0, 3, 100.0);
  EXPECT_NEAR(b1, std::pow(2.0 * std::exp(3.0) * 9.0 * 0.01 * 100.0, 2.0 / 3.0),
              1e-9);
  const BatchSchedule s = MakeBatchSchedule(100000, 4, 4.0, 0.1, 1.0, 3);
  EXPECT_EQ(s.lengths[0], static_cast<std::int64_t>(std::ceil(
                              WarmupLength(4.0, 0.1, 1.0, 3, s.alpha))));
  EXPECT_EQ(s.Total(), 100000);
}

TEST(Schedule, Errors) {
  EXPECT_THROW(MakeBatchSchedule(10000, 2, 1, 0.01, 1, 3), std::invalid_argument);
  EXPECT_EQ(DefaultAlpha(10000, 2), 10000.0);
  EXPECT_THROW(MakeBatchSchedule(10000, 1, 1, 0.01, 1, 3), std::invalid_argument);
  // B_1 >= T.
  EXPECT_THROW(MakeBatchSchedule(1000, 3, 100, 10, 3, 3), std::invalid_argument);
  // First M - 1 batches exhaust T.
  EXPECT_THROW(MakeBatchSchedule(1000, 4, 1, 1, 1, 3, 500.0,
                                 std::int64_t{10}),
               std::invalid_argument);
  // M = 2 with an explicit alpha is allowed.
  EXPECT_EQ(MakeBatchSchedule(1000, 2, 1, 1, 1, 3, 10.0, std::int64_t{10})
                .lengths[1],
            990);
}

TEST(Scaling, Beta) {
  const DesignMatrix id = DesignMatrix::Regularized(2, 1.0);
  EXPECT_EQ(BetaScaling(Eigen::VectorXd::Zero(2), id, 1, 1, 1, 1), 1.0);
  EXPECT_NEAR(BetaScaling(Eigen::VectorXd::Unit(2, 0), id, 100, 1, 1, 1),
              std::exp(2.0), 1e-12);
  EXPECT_NEAR(BetaScaling(0.5 * Eigen::VectorXd::Unit(2, 0), id, 1, 1, 1, 1),
              1.64872, 1e-5);
}

TEST(Scaling, Arms) {
  const DesignMatrix id = DesignMatrix::Regularized(2, 1.0);
  const ArmSet arms = {Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Zero(2)};
  const ScaledArms lin = ScaleArms(arms, LinkKind::kLinear,
                                   Eigen::VectorXd::Zero(2), id, 0.0, 1, 1, 1,
                                   1.0);
  EXPECT_EQ(lin.arms[0], arms[0]);
  EXPECT_EQ(lin.arms[1], arms[1]);

  // mu_dot(0) = 1/4 (logistic) and beta = e: factor sqrt(1/(4e)).
  Eigen::VectorXd x = Eigen::VectorXd::Unit(2, 0);
  const ScaledArms lg = ScaleArms({x}, LinkKind::kLogistic,
                                  Eigen::VectorXd::Zero(2), id, 1.0, 1.0, 1.0,
                                  1.0, 1.0);
  EXPECT_NEAR(lg.arms[0](0), 0.30327, 1e-5);
  EXPECT_EQ(lg.clamps, 0);
  const ScaledArms capped = ScaleArms({x}, LinkKind::kLogistic,
                                      Eigen::VectorXd::Zero(2), id, 0.0, 1.0,
                                      1.0, 1.0, 0.1);
  EXPECT_EQ(capped.clamps, 1);
  EXPECT_NEAR(capped.weights[0], 0.1, 1e-15);
}

TEST(Bounds, UcbLcb) {
  const DesignMatrix id = DesignMatrix::Regularized(2, 1.0);
  auto [u, l] = UcbLcb(Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Zero(2),
                       id, 1.0);
  EXPECT_EQ(u, 1.0);
  EXPECT_EQ(l, -1.0);
  auto [u0, l0] = UcbLcb(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), id,
                         1.0);
  EXPECT_EQ(u0, 0.0);
  EXPECT_EQ(l0, 0.0);
  Eigen::VectorXd x(2), th(2);
  x << 2, 0;
  th << 1, 0;
  auto [u2, l2] = UcbLcb(x, th, Diag2(4, 1), 2.0);
  EXPECT_NEAR(u2, 4.0, 1e-14);
  EXPECT_NEAR(l2, 0.0, 1e-14);
}

TEST(Bounds, Elimination) {
  const DesignMatrix id = DesignMatrix::Regularized(1, 1.0);
  const ArmSet one = {Eigen::VectorXd::Constant(1, 0.3)};
  // Intervals [3, 4] and [0, 1]: theta = 3.5 / 0.5 with width 0.5.
  const ArmSet two = {Eigen::VectorXd::Constant(1, 1.0),
                      Eigen::VectorXd::Constant(1, 1.0 / 7.0)};
  BatchBounds b{Eigen::VectorXd::Constant(1, 3.5), id, 0.5};
  EXPECT_EQ(Eliminate(one, {b}), std::vector<std::size_t>{0});
  // Second arm: <x, theta> = 0.5, width 0.5/7: interval about [0.43, 0.57].
  EXPECT_EQ(Eliminate(two, {b}), std::vector<std::size_t>{0});
  BatchBounds wide{Eigen::VectorXd::Constant(1, 3.5), id, 10.0};
  EXPECT_EQ(Eliminate(two, {wide}).size(), 2u);
  EXPECT_EQ(Eliminate(two, {}).size(), 2u);
  EXPECT_THROW(Eliminate({}, {b}), std::invalid_argument);
}

ExperimentConfig LogisticExample() {
  return LoadExperimentConfig(std::string(DPGLM_SOURCE_DIR) +
                              "/configs/shuffle_logistic.toml");
}

TEST(RunShuffle, SublinearRegretOnLogisticExample) {
  ExperimentConfig cfg = LogisticExample();
  cfg.out_dir.clear();
  const ExperimentResult r = RunExperiment(cfg);
  ASSERT_EQ(r.outcomes.size(), 10u);
  double half = 0.0, full = 0.0;
  for (const SeedOutcome& o : r.outcomes) {
    ASSERT_TRUE(o.transcript.has_value()) << o.error;
    EXPECT_TRUE(o.violations.empty());
    const auto& rounds = o.transcript->rounds;
    half += rounds[rounds.size() / 2 - 1].cumulative_regret;
    full += rounds.back().cumulative_regret;
  }
  EXPECT_LT(full / half, 1.9) << "regret(T) " << full / 10 << " regret(T/2) "
                              << half / 10;
  EXPECT_TRUE(r.summary["pass"].get<bool>());
}

TEST(RunShuffle, PolicyConstantWithinBatchesAndWarmupExplores) {
  ExperimentConfig cfg = LogisticExample();
  ApplyChannelMode(cfg);
  const Instance inst = BuildInstance(cfg);
  const RegretTranscript tr = RunOne(cfg, inst, 3);
  ASSERT_EQ(tr.batches.size(), 3u);
  for (const BatchInfo& b : tr.batches) {
    const auto& first = tr.rounds[static_cast<std::size_t>(b.first_round - 1)];
    for (std::int64_t t = b.first_round; t <= b.last_round; ++t) {
      const RoundRecord& rec = tr.rounds[static_cast<std::size_t>(t - 1)];
      EXPECT_EQ(rec.policy_epoch, first.policy_epoch);
      EXPECT_EQ(rec.explore, b.index == 1);
      EXPECT_EQ(rec.policy_switch, b.index > 1 && t == b.first_round);
    }
    EXPECT_EQ(b.delta_cap, b.index == 1 ? 1.0 : inst.params.kappa_star_inv);
  }
  EXPECT_EQ(tr.batches.back().last_round, tr.horizon);
}

TEST(RunShuffle, WarmupIgnoresRewards) {
  // Flipping the reward model leaves every warm-up choice unchanged.
  ExperimentConfig cfg = LogisticExample();
  ApplyChannelMode(cfg);
  Instance a = BuildInstance(cfg);
  Instance b = a;
  b.model.theta_star = -a.model.theta_star;
  const RegretTranscript ta = RunOne(cfg, a, 2);
  const RegretTranscript tb = RunOne(cfg, b, 2);
  for (std::int64_t t = 1; t <= ta.batches[0].last_round; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    EXPECT_EQ(ta.rounds[i].arm_index, tb.rounds[i].arm_index);
    EXPECT_EQ(ta.rounds[i].context_hash, tb.rounds[i].context_hash);
  }
}

TEST(RunShuffle, Deterministic) {
  ExperimentConfig cfg = LogisticExample();
  cfg.channel = ChannelMode::kFull;
  cfg.shuffle.lambda.reset();
  cfg.horizon = 2000;
  ApplyChannelMode(cfg);
  const Instance inst = BuildInstance(cfg);
  const RegretTranscript a = RunOne(cfg, inst, 4);
  const RegretTranscript b = RunOne(cfg, inst, 4);
  EXPECT_EQ(RoundsToCsv(a), RoundsToCsv(b));
  EXPECT_EQ(SidecarToJson(a).dump(), SidecarToJson(b).dump());
}

TEST(RunShuffle, FullProtocolLedgerIsExactlyOnBudget) {
  ExperimentConfig cfg = LogisticExample();
  cfg.channel = ChannelMode::kFull;
  cfg.shuffle.lambda.reset();
  cfg.horizon = 2000;
  ApplyChannelMode(cfg);
  const Instance inst = BuildInstance(cfg);
  const RegretTranscript tr = RunOne(cfg, inst, 1);
  const AuditReport rep = PrivacyLedgerCheck(tr);
  EXPECT_TRUE(rep.ExactlyOnBudget()) << rep.ToText();
  EXPECT_EQ(rep.eps_total, cfg.shuffle.eps);
  EXPECT_EQ(rep.delta_total, cfg.shuffle.delta);
  std::set<std::int64_t> groups;
  for (const LedgerEntry& e : tr.ledger) groups.insert(e.group);
  EXPECT_EQ(groups.size(), tr.batches.size());
}

TEST(RunShuffle, LinearLinkLargeGammaIsBoundedExploration) {
  ExperimentConfig cfg = LogisticExample();
  cfg.recipe.link = LinkKind::kLinear;
  cfg.shuffle.gamma = 50.0;
  cfg.shuffle.b1 = 100;
  cfg.horizon = 1000;
  ApplyChannelMode(cfg);
  const Instance inst = BuildInstance(cfg);
  const RegretTranscript tr = RunOne(cfg, inst, 1);
  double max_gap = 2.0 * inst.model.theta_star.norm();
  EXPECT_LE(tr.CumulativeRegret() / 1000.0, max_gap);
  EXPECT_TRUE(CheckInvariants(tr).empty());
}

TEST(RunShuffle, ParameterValidation) {
  ExperimentConfig cfg = LogisticExample();
  const Instance inst = BuildInstance(cfg);
  ShuffleGlmConfig sc = cfg.shuffle;
  sc.eps = 5.0;
  EXPECT_THROW(DeriveShuffleGlmParams(sc, inst.model, inst.params, 4000),
               std::invalid_argument);
  sc.eps = 1.0;
  sc.delta = 0.5;
  EXPECT_THROW(DeriveShuffleGlmParams(sc, inst.model, inst.params, 4000),
               std::invalid_argument);
}

}  // namespace
}  // namespace dpglm
