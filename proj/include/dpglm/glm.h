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

#ifndef DPGLM_GLM_H_
#define DPGLM_GLM_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpglm/random.h"

namespace dpglm {

using ArmSet = std::vector<Eigen::VectorXd>;

enum class LinkKind { kLogistic, kProbit, kLinear };

std::string_view LinkName(LinkKind link);
// Accepts "logistic", "probit" or "linear"; throws std::invalid_argument.
LinkKind ParseLink(std::string_view name);

// Standard normal density and CDF.
double NormalPdf(double z);
double NormalCdf(double z);

// Mean function mu(z).
double Mu(LinkKind link, double z);
// Derivative of the mean function.
double MuDot(LinkKind link, double z);
// B(z) = integral of mu over [0, z], so B(0) = 0.
double IntegratedMu(LinkKind link, double z);

// -r <x, theta> + B(<x, theta>).
double PointwiseLoss(LinkKind link, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x, double reward);

// (mu(<x, theta>) - r) x.
Eigen::VectorXd LossGradient(LinkKind link, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& x, double reward);

// Ground truth of a bandit instance. Rewards live in [0, reward_bound].
struct GlmModel {
  LinkKind link = LinkKind::kLogistic;
  Eigen::VectorXd theta_star;
  double reward_bound = 1.0;
  double norm_bound = 1.0;
  // Standard deviation of the additive noise used by the linear link only.
  double linear_noise = 0.1;

  // Throws std::invalid_argument when |theta_star| > norm_bound or the bounds
  // are not positive.
  void Validate() const;

  double MeanReward(const Eigen::VectorXd& x) const;
};

struct InstanceParams {
  // max over arms of 1 / mu_dot(<x, theta*>).
  double kappa = 1.0;
  // max over arms of mu_dot(<x, theta*>), i.e. 1 / kappa*.
  double kappa_star_inv = 1.0;
  // Mean over arm sets of mu_dot at that set's best arm, i.e. 1 / kappa_hat.
  // Only defined for stochastic contexts.
  std::optional<double> kappa_hat_inv;
};

// Computes the non-linearity parameters over a collection of arm sets. Pass
// stochastic = false for adversarial streams, where kappa_hat is undefined.
InstanceParams ComputeInstanceParams(const GlmModel& model,
                                     const std::vector<ArmSet>& arm_sets,
                                     bool stochastic = true);

// Draws one reward. Logistic and probit rewards are Bernoulli(mu) scaled by
// the reward bound; linear rewards are mu plus clamped Gaussian noise.
double SampleReward(const GlmModel& model, const Eigen::VectorXd& x, Rng& rng);

}  // namespace dpglm

#endif  // DPGLM_GLM_H_
