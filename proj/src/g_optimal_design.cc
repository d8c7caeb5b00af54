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

#include "dpglm/g_optimal_design.h"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace dpglm {
namespace {

// Leverages x_i^T M^{-1} x_i for every arm.
Eigen::VectorXd Leverages(const ArmSet& arms, const Eigen::VectorXd& weights,
                          double ridge_eps) {
  const Eigen::Index d = arms.front().size();
  Eigen::MatrixXd m = ridge_eps * Eigen::MatrixXd::Identity(d, d);
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (weights(static_cast<Eigen::Index>(i)) > 0) {
      m.selfadjointView<Eigen::Lower>().rankUpdate(
          arms[i], weights(static_cast<Eigen::Index>(i)));
    }
  }
  m = m.selfadjointView<Eigen::Lower>();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  Eigen::VectorXd out(static_cast<Eigen::Index>(arms.size()));
  for (std::size_t i = 0; i < arms.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) =
        std::max(0.0, arms[i].dot(ldlt.solve(arms[i])));
  }
  return out;
}

}  // namespace

double DesignGValue(const ArmSet& arms, const Eigen::VectorXd& weights,
                    double ridge_eps) {
  if (arms.empty()) throw std::invalid_argument("empty arm set");
  if (weights.size() != static_cast<Eigen::Index>(arms.size())) {
    throw std::invalid_argument("weights and arms differ in length");
  }
  return Leverages(arms, weights, ridge_eps).maxCoeff();
}

DesignDistribution GOptimal(const ArmSet& arms,
                            const GDesignOptions& options) {
  if (arms.empty()) throw std::invalid_argument("G-optimal design needs arms");
  const Eigen::Index d = arms.front().size();
  for (const Eigen::VectorXd& x : arms) {
    if (x.size() != d) throw std::invalid_argument("arm dimension mismatch");
  }
  if (!(options.ridge_eps > 0)) {
    throw std::invalid_argument("ridge_eps must be positive");
  }
  const auto k = static_cast<Eigen::Index>(arms.size());
  const double target = options.target_factor * static_cast<double>(d);

  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd best_w = w;
  Eigen::VectorXd lev = Leverages(arms, w, options.ridge_eps);
  Eigen::Index j = 0;
  double g = lev.maxCoeff(&j);
  double best_g = g;

  DesignDistribution dist;
  dist.ridge_eps = options.ridge_eps;
  dist.g_history.push_back(best_g);
  int it = 0;
  while (best_g > target && it < options.max_iters) {
    // Closed-form line search for the log-det objective.
    const double dd = static_cast<double>(d);
    const double step = (g / dd - 1.0) / (g - 1.0);
    w *= 1.0 - step;
    w(j) += step;
    lev = Leverages(arms, w, options.ridge_eps);
    g = lev.maxCoeff(&j);
    ++it;
    if (g < best_g) {
      best_g = g;
      best_w = w;
    }
    dist.g_history.push_back(best_g);
  }
  dist.iterations = it;
  if (best_g > target) {
    throw std::runtime_error("G-optimal design stuck at g = " +
                             std::to_string(best_g) + " after " +
                             std::to_string(it) + " iterations");
  }

  // Drop negligible atoms unless that breaks the bound.
  Eigen::VectorXd pruned = best_w;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (pruned(i) < options.prune_below) pruned(i) = 0.0;
  }
  pruned /= pruned.sum();
  const double pruned_g = DesignGValue(arms, pruned, options.ridge_eps);
  if (pruned_g <= best_g || pruned_g <= target) {
    best_w = pruned;
    best_g = pruned_g;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (best_w(i) > 0) total += best_w(i);
  }
  std::vector<double> weights;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (best_w(i) > 0) {
      dist.support.push_back(arms[static_cast<std::size_t>(i)]);
      dist.indices.push_back(static_cast<std::size_t>(i));
      weights.push_back(best_w(i) / total);
    }
  }
  dist.weights = Eigen::Map<Eigen::VectorXd>(
      weights.data(), static_cast<Eigen::Index>(weights.size()));
  dist.g_value = best_g;
  return dist;
}

std::size_t SampleSupportIndex(const DesignDistribution& dist, Rng& rng) {
  if (dist.support.empty()) throw std::invalid_argument("empty design");
  std::discrete_distribution<std::size_t> pick(
      dist.weights.data(), dist.weights.data() + dist.weights.size());
  return pick(rng);
}

const Eigen::VectorXd& SampleArm(const DesignDistribution& dist, Rng& rng) {
  return dist.support[SampleSupportIndex(dist, rng)];
}

}  // namespace dpglm
