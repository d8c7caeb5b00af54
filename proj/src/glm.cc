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

#include "dpglm/glm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpglm {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// log(1 + e^z) without overflow.
double Softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void CheckDims(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  if (theta.size() != x.size()) {
    throw std::invalid_argument("dimension mismatch: theta has " +
                                std::to_string(theta.size()) +
                                " entries, x has " + std::to_string(x.size()));
  }
}

}  // namespace

std::string_view LinkName(LinkKind link) {
  switch (link) {
    case LinkKind::kLogistic:
      return "logistic";
    case LinkKind::kProbit:
      return "probit";
    case LinkKind::kLinear:
      return "linear";
  }
  return "unknown";
}

LinkKind ParseLink(std::string_view name) {
  if (name == "logistic") return LinkKind::kLogistic;
  if (name == "probit") return LinkKind::kProbit;
  if (name == "linear") return LinkKind::kLinear;
  throw std::invalid_argument("unknown link: " + std::string(name));
}

double NormalPdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double NormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double Mu(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLogistic:
      // Both branches avoid overflow of e^{-z}.
      if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
      return std::exp(z) / (1.0 + std::exp(z));
    case LinkKind::kProbit:
      return NormalCdf(z);
    case LinkKind::kLinear:
      return z;
  }
  return 0.0;
}

double MuDot(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLogistic: {
      const double m = Mu(link, z);
      return m * (1.0 - m);
    }
    case LinkKind::kProbit:
      return NormalPdf(z);
    case LinkKind::kLinear:
      return 1.0;
  }
  return 0.0;
}

double IntegratedMu(LinkKind link, double z) {
  switch (link) {
    case LinkKind::kLogistic:
      return Softplus(z) - std::numbers::ln2;
    case LinkKind::kProbit:
      return z * NormalCdf(z) + NormalPdf(z) - kInvSqrt2Pi;
    case LinkKind::kLinear:
      return 0.5 * z * z;
  }
  return 0.0;
}

double PointwiseLoss(LinkKind link, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x, double reward) {
  CheckDims(theta, x);
  const double z = x.dot(theta);
  return -reward * z + IntegratedMu(link, z);
}

Eigen::VectorXd LossGradient(LinkKind link, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& x, double reward) {
  CheckDims(theta, x);
  return (Mu(link, x.dot(theta)) - reward) * x;
}

void GlmModel::Validate() const {
  if (!(reward_bound > 0) || !(norm_bound >= 0)) {
    throw std::invalid_argument("reward and norm bounds must be positive");
  }
  if (theta_star.size() == 0) {
    throw std::invalid_argument("theta_star must be non-empty");
  }
  if (theta_star.norm() > norm_bound * (1 + 1e-12) + 1e-15) {
    throw std::invalid_argument("|theta_star| exceeds the norm bound");
  }
}

double GlmModel::MeanReward(const Eigen::VectorXd& x) const {
  return Mu(link, x.dot(theta_star));
}

InstanceParams ComputeInstanceParams(const GlmModel& model,
                                     const std::vector<ArmSet>& arm_sets,
                                     bool stochastic) {
  if (arm_sets.empty()) {
    throw std::invalid_argument("instance parameters need at least one arm set");
  }
  InstanceParams params;
  params.kappa = 0.0;
  params.kappa_star_inv = 0.0;
  double slope_at_best_sum = 0.0;
  for (const ArmSet& arms : arm_sets) {
    if (arms.empty()) {
      throw std::invalid_argument("empty arm set");
    }
    double best_mean = -std::numeric_limits<double>::infinity();
    double slope_at_best = 0.0;
    for (const Eigen::VectorXd& x : arms) {
      const double z = x.dot(model.theta_star);
      const double slope = MuDot(model.link, z);
      params.kappa = std::max(params.kappa, 1.0 / slope);
      params.kappa_star_inv = std::max(params.kappa_star_inv, slope);
      const double mean = Mu(model.link, z);
      if (mean > best_mean) {
        best_mean = mean;
        slope_at_best = slope;
      }
    }
    slope_at_best_sum += slope_at_best;
  }
  if (stochastic) {
    params.kappa_hat_inv =
        slope_at_best_sum / static_cast<double>(arm_sets.size());
  }
  return params;
}

double SampleReward(const GlmModel& model, const Eigen::VectorXd& x,
                    Rng& rng) {
  const double mean = model.MeanReward(x);
  if (model.link == LinkKind::kLinear) {
    double draw = mean;
    if (model.linear_noise > 0) {
      std::normal_distribution<double> noise(0.0, model.linear_noise);
      draw += noise(rng);
    }
    return std::clamp(draw, 0.0, model.reward_bound);
  }
  std::bernoulli_distribution coin(std::clamp(mean, 0.0, 1.0));
  return coin(rng) ? model.reward_bound : 0.0;
}

}  // namespace dpglm
