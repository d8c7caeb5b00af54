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

// Non-private comparison algorithms.

#ifndef DPGLM_BASELINES_H_
#define DPGLM_BASELINES_H_

#include <cstdint>

#include "dpglm/algo_jdp.h"
#include "dpglm/environment.h"
#include "dpglm/transcript.h"

namespace dpglm {

struct GlmUcbConfig {
  // Bonus is width * sqrt(kappa) * ||x||_{V^-1}.
  double width = 1.0;
  // Ridge of the Gram matrix and of the MLE.
  double lambda = 1.0;
  // Refit the MLE every this many rounds.
  std::int64_t refit_every = 1;
  // Unset: the instance's realized kappa.
  std::optional<double> kappa;
};

// GLM-UCB with an exact MLE over the whole history and the unweighted
// regularized Gram matrix.
RegretTranscript RunGlmUcb(Environment& env, const GlmUcbConfig& cfg,
                           std::uint64_t seed);

// The joint-DP algorithm with both trees noise-free and the exact MLE in
// place of P_GD. Every other setting is taken from cfg.
JdpConfig RsNonprivateConfig(JdpConfig cfg);
RegretTranscript RunRsNonprivate(Environment& env, const JdpConfig& cfg,
                                 std::uint64_t seed);

}  // namespace dpglm

#endif  // DPGLM_BASELINES_H_
