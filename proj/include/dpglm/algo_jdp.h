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

// Joint-DP GLM bandit for adversarial contexts.
//
// Each round either explores (Criterion I: some arm is uncertain under the
// exploration design V) or exploits with a rarely refit policy estimate.
// The policy is refit when the running maximum of log det H has grown by
// ln 2 since the last switch (Criterion II). V and H are released through
// two binary-tree mechanisms.

#ifndef DPGLM_ALGO_JDP_H_
#define DPGLM_ALGO_JDP_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include "json.hpp"

#include "dpglm/environment.h"
#include "dpglm/glm.h"
#include "dpglm/private_optimizer.h"
#include "dpglm/psd_matrix.h"
#include "dpglm/transcript.h"

namespace dpglm {

enum class Estimator {
  kPgd,       // private projected gradient descent
  kExactMle,  // non-private constrained MLE
};

std::string_view EstimatorName(Estimator e);
Estimator ParseEstimator(std::string_view name);

struct JdpConfig {
  double eps = 8.0;
  double delta = 0.02;
  double zeta = 0.02;
  // Unset values come from the environment's model and instance.
  std::optional<double> reward_bound;
  std::optional<double> norm_bound;
  std::optional<double> kappa;
  std::optional<double> kappa_star_inv;
  // Hyperparameters. Unset values use the closed-form defaults with all
  // leading constants equal to one.
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> gamma;
  // Sets gamma so that gamma * sqrt(kappa) equals this value. Overrides
  // gamma.
  std::optional<double> gamma_root_kappa;
  // Sets gamma sqrt(kappa) to this fraction of sqrt(lambda_min). Below one,
  // Criterion I never fires and no round explores. Overrides both of the
  // above.
  std::optional<double> gamma_lambda_min_frac;
  // Multipliers on the default optimizer-call cutoffs, or explicit values.
  double count1_scale = 1.0;
  double count2_scale = 1.0;
  std::optional<double> count1_cutoff;
  std::optional<double> count2_cutoff;
  // Gaussian node noise in both trees.
  bool tree_noise = true;
  Estimator estimator = Estimator::kPgd;
  // Summation channel inside P_GD.
  SumChannel channel = SumChannel::kGaussian;
  double shuffle_cb = 1.0;
  std::optional<std::int64_t> pgd_iterations;
  std::int64_t pgd_max_iterations = 100000;
  // Return the last P_GD iterate instead of the running average.
  bool pgd_last_iterate = false;
  // Per-point gradient clip. Unset: R + ridge * max ||theta|| over the set,
  // a bound on every per-point gradient norm.
  std::optional<double> lipschitz;
  // Random probes of the norm-transfer property per run.
  int norm_checks = 100;
  std::string name = "jdp";
};

// Every derived quantity of a run.
struct JdpParams {
  std::int64_t horizon = 0;
  int d = 0;
  double R = 1.0;
  double S = 1.0;
  double kappa = 1.0;
  double kappa_star_inv = 1.0;
  double lambda = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double count1_cutoff = 1.0;
  double count2_cutoff = 1.0;
  double eps_o1 = 0.0;
  double delta_o1 = 0.0;
  double eps_o2 = 0.0;
  double delta_o2 = 0.0;
  double sensitivity_v = 1.0;
  double sensitivity_h = 1.0;
  double sigma_v = 0.0;
  double sigma_h = 0.0;
  // d log2(2 + 2T / (lambda_min d)).
  double switch_bound = 0.0;
  // 8 d R^2 kappa gamma^2 ln T.
  double explore_bound = 0.0;

  double GammaRootKappa() const;
  nlohmann::json ToJson() const;
};

// Throws std::invalid_argument on invalid budgets or hyperparameters.
JdpParams DeriveJdpParams(const JdpConfig& cfg, const GlmModel& model,
                          const InstanceParams& instance,
                          std::int64_t horizon);

// True iff max_x ||x||^2_{V^-1} >= 1 / (gamma^2 kappa R^2).
bool CriterionI(const ArmSet& arms, const DesignMatrix& v, double gamma,
                double kappa, double reward_bound);

// Running maximum of log det H and its value at the last switch. A fresh
// tracker starts from log det of the initial H.
class SwitchTracker {
 public:
  explicit SwitchTracker(double initial_logdet)
      : running_max_(initial_logdet), at_last_switch_(initial_logdet) {}

  void Observe(double logdet) {
    if (logdet > running_max_) running_max_ = logdet;
  }
  // Criterion II: the running maximum exceeds its value at the last switch
  // by more than ln 2.
  bool ShouldSwitch() const;
  void MarkSwitch() { at_last_switch_ = running_max_; }

  double running_max() const { return running_max_; }
  double at_last_switch() const { return at_last_switch_; }

 private:
  double running_max_;
  double at_last_switch_;
};

// Optimistic index <x, theta> + width * ||x||_{M^-1}.
double OptimisticIndex(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       const DesignMatrix& m, double width);

// Runs T = env.horizon() rounds. All algorithm randomness (tree noise,
// optimizer noise, probes) derives from seed.
RegretTranscript RunJdp(Environment& env, const JdpConfig& cfg,
                        std::uint64_t seed);

}  // namespace dpglm

#endif  // DPGLM_ALGO_JDP_H_
