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

// Multi-message shuffle-model summation of bounded vectors and symmetric
// matrices.
//
// Each user encodes every coordinate as a multiset of g + b bits: a
// stochastically rounded value on a grid of g steps plus Binomial(b, p)
// blanket noise. A shuffler anonymizes all bits; the analyzer only needs the
// number of ones per label, so messages are stored as counts and the shuffle
// pools them. Inputs in [-cap, cap] are shifted by +cap and encoded over the
// range [0, 2 cap].

#ifndef DPGLM_SHUFFLE_SUM_H_
#define DPGLM_SHUFFLE_SUM_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dpglm/random.h"

namespace dpglm {

struct ProtocolParams {
  std::int64_t g = 4;      // quantization granularity
  std::int64_t b = 0;      // binomial noise trials
  double p = 0.25;         // binomial success probability
  std::int64_t n = 1;      // number of users
  double delta_cap = 1.0;  // per-entry magnitude bound
  int d = 1;               // dimension
};

// g = max(ceil(2 sqrt(n)), d, 4), p = 1/4 and
// b = ceil(c_b * 24e4 g^2 ln(4 (d^2 + 1) / delta)^2 / (eps^2 n)).
// Requires 0 < eps <= 15, 0 < delta < 1/2, n >= 1, 0 < c_b <= 1.
ProtocolParams DeriveProtocolParams(std::int64_t n, int d, double eps,
                                    double delta, double c_b = 1.0,
                                    double delta_cap = 1.0);

struct ShuffleMessage {
  std::size_t label = 0;
  std::int64_t ones_count = 0;
};

// Number of labels used by the matrix randomizer: d (d + 1) / 2.
std::size_t MatrixLabelCount(int d);
// Label of the upper-triangular entry (i, j), i <= j, in row-major order.
std::size_t MatrixLabel(int i, int j, int d);

// Encodes x in [0, range] as floor(x g / range) + Ber(frac) + Bin(b, p).
ShuffleMessage ScalarRandomize(double x, double range,
                               const ProtocolParams& params, Rng& rng,
                               std::size_t label = 0);
// Same with range = params.delta_cap.
ShuffleMessage ScalarRandomize(double x, const ProtocolParams& params,
                               Rng& rng);

// One message per coordinate; requires |v|_inf <= delta_cap.
std::vector<ShuffleMessage> RandomizeVector(const Eigen::VectorXd& v,
                                            const ProtocolParams& params,
                                            Rng& rng);

// One message per upper-triangular entry; requires a symmetric matrix with
// max |X_ij| <= delta_cap.
std::vector<ShuffleMessage> RandomizeMatrix(const Eigen::MatrixXd& x,
                                            const ProtocolParams& params,
                                            Rng& rng);

struct PooledCounts {
  std::vector<std::int64_t> counts;  // indexed by label
  std::int64_t users = 0;
};

// Pools the messages of all users per label. Every user must send every
// label exactly once.
PooledCounts Shuffle(const std::vector<std::vector<ShuffleMessage>>& users,
                     std::size_t num_labels);

// Debug path: materializes every bit, permutes them uniformly and regroups by
// label. Only practical for small g + b; must agree with Shuffle.
PooledCounts ShuffleMaterialized(
    const std::vector<std::vector<ShuffleMessage>>& users,
    std::size_t num_labels, const ProtocolParams& params, Rng& rng);

// Debiased estimate of the sum of the users' vectors.
Eigen::VectorXd AnalyzeVector(const PooledCounts& pooled,
                              const ProtocolParams& params);
// Debiased estimate of the sum of the users' matrices; exactly symmetric.
Eigen::MatrixXd AnalyzeMatrix(const PooledCounts& pooled,
                              const ProtocolParams& params);

// Per-label pooled counts for protocol audits.
nlohmann::json PooledCountsToJson(const PooledCounts& pooled,
                                  const ProtocolParams& params);

// Variance of the analyzer output per entry contributed by the binomial
// blanket noise: n b p (1 - p) (2 cap / g)^2.
double BlanketNoiseVariance(const ProtocolParams& params);

// End-to-end protocol helpers.
Eigen::VectorXd ShuffledVectorSum(const std::vector<Eigen::VectorXd>& inputs,
                                  const ProtocolParams& params, Rng& rng);
Eigen::MatrixXd ShuffledMatrixSum(const std::vector<Eigen::MatrixXd>& inputs,
                                  const ProtocolParams& params, Rng& rng);

}  // namespace dpglm

#endif  // DPGLM_SHUFFLE_SUM_H_
