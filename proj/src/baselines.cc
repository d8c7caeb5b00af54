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

#include "dpglm/baselines.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dpglm/private_optimizer.h"
#include "dpglm/psd_matrix.h"

namespace dpglm {

RegretTranscript RunGlmUcb(Environment& env, const GlmUcbConfig& cfg,
                           std::uint64_t seed) {
  if (!(cfg.width > 0)) throw std::invalid_argument("width must be > 0");
  if (!(cfg.lambda > 0)) throw std::invalid_argument("lambda must be > 0");
  if (cfg.refit_every < 1) throw std::invalid_argument("refit_every >= 1");
  const int d = env.dim();
  const LinkKind link = env.model().link;
  const double kappa = cfg.kappa.value_or(env.instance().params.kappa);
  const double bonus = cfg.width * std::sqrt(kappa);

  RegretTranscript tr;
  tr.algorithm = "glm_ucb";
  tr.seed = seed;
  tr.horizon = env.horizon();
  DesignMatrix v = DesignMatrix::Regularized(d, cfg.lambda);
  const ConvexFeasibleSet free_set = ConvexFeasibleSet::Unconstrained(d);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  std::vector<Observation> data;

  for (std::int64_t t = 1; t <= env.horizon(); ++t) {
    if (!data.empty() && (t - 1) % cfg.refit_every == 0) {
      MleOptions options;
      options.warm_start = theta;
      try {
        theta = MleExact(link, data, cfg.lambda, free_set, options);
        ++tr.counters.count2;
      } catch (const std::runtime_error&) {
        ++tr.counters.estimator_failures;
      }
    }
    const ArmSet arms = env.NextContextSet();
    std::size_t chosen = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const double index = arms[i].dot(theta) + bonus * v.InverseNorm(arms[i]);
      if (index > best) {
        best = index;
        chosen = i;
      }
    }
    const Eigen::VectorXd& x = arms[chosen];
    const double r = env.SampleReward(x);
    data.push_back({x, r});
    v.RankOneUpdate(x);

    RoundRecord rec;
    rec.context_hash = ContextHash(arms);
    rec.arm_index = static_cast<std::int64_t>(chosen);
    rec.reward = r;
    rec.instant_regret = env.InstantRegret(arms, chosen);
    tr.Append(rec);
  }

  LedgerEntry none;
  none.mechanism = "none";
  none.first_round = 1;
  none.last_round = env.horizon();
  none.is_private = false;
  none.details = {{"kind", "none"}};
  tr.ledger.push_back(none);
  tr.settings = {{"width", cfg.width},
                 {"lambda", cfg.lambda},
                 {"refit_every", cfg.refit_every},
                 {"kappa", kappa}};
  return tr;
}

JdpConfig RsNonprivateConfig(JdpConfig cfg) {
  cfg.tree_noise = false;
  cfg.estimator = Estimator::kExactMle;
  cfg.channel = SumChannel::kExact;
  cfg.name = "rs_nonprivate";
  return cfg;
}

RegretTranscript RunRsNonprivate(Environment& env, const JdpConfig& cfg,
                                 std::uint64_t seed) {
  return RunJdp(env, RsNonprivateConfig(cfg), seed);
}

}  // namespace dpglm
