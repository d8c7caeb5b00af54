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

// G-optimal experimental design over a finite arm set, computed with
// Frank-Wolfe on the log-det objective (Kiefer-Wolfowitz).

#ifndef DPGLM_G_OPTIMAL_DESIGN_H_
#define DPGLM_G_OPTIMAL_DESIGN_H_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dpglm/glm.h"
#include "dpglm/random.h"

namespace dpglm {

struct GDesignOptions {
  int max_iters = 500;
  double ridge_eps = 1e-8;
  // Iteration stops once g_value <= target_factor * d.
  double target_factor = 2.0;
  double prune_below = 1e-9;
};

struct DesignDistribution {
  // Support arms and their positions in the input arm set.
  ArmSet support;
  std::vector<std::size_t> indices;
  Eigen::VectorXd weights;
  // max over all input arms of |x|^2 in the inverse of
  // ridge_eps I + sum_i w_i x_i x_i^T.
  double g_value = 0.0;
  double ridge_eps = 0.0;
  int iterations = 0;
  // g_value of the reported iterate after every Frank-Wolfe step.
  std::vector<double> g_history;
};

// max_x |x|^2 under (ridge_eps I + sum_i w_i x_i x_i^T)^{-1}.
double DesignGValue(const ArmSet& arms, const Eigen::VectorXd& weights,
                    double ridge_eps);

// Throws std::invalid_argument on an empty arm set and std::runtime_error
// when the target is not reached within max_iters.
DesignDistribution GOptimal(const ArmSet& arms,
                            const GDesignOptions& options = {});

// Categorical draw over the support; returns a position in `support`.
std::size_t SampleSupportIndex(const DesignDistribution& dist, Rng& rng);
const Eigen::VectorXd& SampleArm(const DesignDistribution& dist, Rng& rng);

}  // namespace dpglm

#endif  // DPGLM_G_OPTIMAL_DESIGN_H_
