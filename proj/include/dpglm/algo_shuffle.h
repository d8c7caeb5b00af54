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

// Batched shuffle-DP GLM bandit for stochastic contexts.
//
// A G-optimal warm-up batch yields a coarse estimate theta_1 and design V.
// Later batches eliminate arms with the confidence bounds of every earlier
// batch, rescale the survivors by mu_dot(<x, theta_1>) / beta(x) and sample
// from a G-optimal design over the rescaled arms. Covariances go through the
// shuffled summation protocol, estimates through P_GD.

#ifndef DPGLM_ALGO_SHUFFLE_H_
#define DPGLM_ALGO_SHUFFLE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dpglm/environment.h"
#include "dpglm/glm.h"
#include "dpglm/private_optimizer.h"
#include "dpglm/psd_matrix.h"
#include "dpglm/transcript.h"

namespace dpglm {

struct BatchSchedule {
  int M = 0;  // number of non-empty batches after truncation
  double alpha = 0.0;
  std::vector<std::int64_t> lengths;

  std::int64_t Total() const;
  nlohmann::json ToJson() const;
};

// alpha = T^(1 / (2 (1 - 2^(1 - M)))).
double DefaultAlpha(std::int64_t horizon, int batches);

// ((sqrt(kappa) e^(3S) d^2 gamma^2 / S) alpha)^(2/3).
double WarmupLength(double kappa, double gamma, double norm_bound, int d,
                    double alpha);

// B_1 from the warm-up formula (or b1 when given), B_2 = ceil(alpha),
// B_k = ceil(alpha sqrt(B_{k-1})). The final batch is truncated or extended
// so the lengths sum to T. Throws std::invalid_argument when M < 2, when
// M = 2 without an explicit alpha, when B_1 >= T or when the first M - 1
// batches already use up the horizon.
BatchSchedule MakeBatchSchedule(std::int64_t horizon, int batches,
                                double kappa, double gamma,
                                double norm_bound, int d,
                                std::optional<double> alpha = std::nullopt,
                                std::optional<std::int64_t> b1 = std::nullopt);

// exp(R min(2S, gamma sqrt(kappa) ||x||_{V^-1})).
double BetaScaling(const Eigen::VectorXd& x, const DesignMatrix& v,
                   double gamma, double kappa, double reward_bound,
                   double norm_bound);

struct ScaledArms {
  ArmSet arms;
  // mu_dot(<x, theta_1>) / beta(x) after clamping.
  std::vector<double> weights;
  std::int64_t clamps = 0;
};

// x -> sqrt(w(x)) x with w = mu_dot(<x, theta_1>) / beta(x), clamped to
// weight_cap.
ScaledArms ScaleArms(const ArmSet& arms, LinkKind link,
                     const Eigen::VectorXd& theta_1, const DesignMatrix& v,
                     double gamma, double kappa, double reward_bound,
                     double norm_bound, double weight_cap);

// <x, theta> -/+ width ||x||_{V^-1}, as (ucb, lcb).
std::pair<double, double> UcbLcb(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& theta,
                                 const DesignMatrix& v, double width);

// Confidence bounds from one finished batch.
struct BatchBounds {
  Eigen::VectorXd theta;
  DesignMatrix v;
  double width = 0.0;
};

// Indices of the arms that survive elimination by every batch in order.
// Never empty.
std::vector<std::size_t> Eliminate(const ArmSet& arms,
                                   const std::vector<BatchBounds>& history);

struct ShuffleGlmConfig {
  int batches = 3;
  double eps = 1.0;
  double delta = 0.02;
  std::optional<double> reward_bound;
  std::optional<double> norm_bound;
  std::optional<double> kappa;
  std::optional<double> kappa_star_inv;
  // Hyperparameters. Unset values use the closed-form defaults with all
  // leading constants equal to one.
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> sigma;
  std::optional<double> nu;
  std::optional<double> alpha;
  std::optional<std::int64_t> b1;
  // Covariance summation channel. kGaussian adds symmetric Gaussian noise
  // with the protocol's blanket-noise variance.
  SumChannel covariance_channel = SumChannel::kShuffle;
  // Summation channel inside P_GD.
  SumChannel optimizer_channel = SumChannel::kGaussian;
  double shuffle_cb = 1.0;
  std::optional<std::int64_t> pgd_iterations;
  std::int64_t pgd_max_iterations = 100000;
  std::optional<double> lipschitz;
  std::string name = "shuffle";
};

struct ShuffleGlmParams {
  std::int64_t horizon = 0;
  int d = 0;
  double R = 1.0;
  double S = 1.0;
  double kappa = 1.0;
  double kappa_star_inv = 1.0;
  double sigma = 0.0;
  double nu = 0.0;
  double lambda = 1.0;
  double gamma = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  BatchSchedule schedule;

  double GammaRootKappa() const;
  nlohmann::json ToJson() const;
};

// Throws std::invalid_argument outside eps < 5, delta < 1/2, on a
// non-positive lambda_min or an infeasible schedule.
ShuffleGlmParams DeriveShuffleGlmParams(const ShuffleGlmConfig& cfg,
                                        const GlmModel& model,
                                        const InstanceParams& instance,
                                        std::int64_t horizon);

// Runs T = env.horizon() rounds. Requires stochastic contexts.
RegretTranscript RunShuffleGlm(Environment& env, const ShuffleGlmConfig& cfg,
                               std::uint64_t seed);

}  // namespace dpglm

#endif  // DPGLM_ALGO_SHUFFLE_H_
