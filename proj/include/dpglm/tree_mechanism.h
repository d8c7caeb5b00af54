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

// Binary-tree (continual release) mechanism over a stream of symmetric
// matrices.
//
// Positions are 1-based. Level h holds nodes covering the dyadic intervals
// [i 2^h + 1, (i + 1) 2^h]. Each node keeps its clean partial sum and, once
// its interval is complete, one symmetric Gaussian noise matrix
// Z = (Z' + Z'^T) / 2 with Z' i.i.d. N(0, sigma^2). Diagonal entries thus
// have variance sigma^2 and off-diagonal entries sigma^2 / 2.

#ifndef DPGLM_TREE_MECHANISM_H_
#define DPGLM_TREE_MECHANISM_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpglm/random.h"

namespace dpglm {

// A closed dyadic interval [first, last] of stream positions.
struct DyadicInterval {
  std::int64_t first = 1;
  std::int64_t last = 1;
  int level = 0;
  std::int64_t index = 0;

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) =
      default;
};

// Smallest power of two >= horizon.
std::int64_t PaddedHorizon(std::int64_t horizon);
// ceil(log2 horizon) + 1.
int TreeLevels(std::int64_t horizon);

// Greedy dyadic cover of [1, t] inside a tree of the given padded horizon.
std::vector<DyadicInterval> Decomposition(std::int64_t t,
                                          std::int64_t padded_horizon);
// All nodes containing leaf position `leaf`, from the leaf up to the root.
std::vector<DyadicInterval> PathIntervals(std::int64_t leaf,
                                          std::int64_t padded_horizon);

// sigma = 6 sqrt(m) ln(32 / delta) sensitivity / eps, m = TreeLevels(T).
double SigmaFromBudget(double eps, double delta, std::int64_t horizon,
                       double sensitivity);

class NoisyPrefixTree {
 public:
  // Throws on horizon < 1, dim < 1, sigma < 0 or a horizon above 2^20.
  NoisyPrefixTree(std::int64_t horizon, int dim, double sigma,
                  std::uint64_t seed,
                  double sensitivity = std::numeric_limits<double>::infinity());

  std::int64_t horizon() const { return horizon_; }
  std::int64_t padded_horizon() const { return padded_; }
  int levels() const { return levels_; }
  int dim() const { return dim_; }
  double sigma() const { return sigma_; }
  double sensitivity() const { return sensitivity_; }
  // Number of increments inserted so far.
  std::int64_t size() const { return next_t_ - 1; }
  std::int64_t next_t() const { return next_t_; }
  std::int64_t sensitivity_warnings() const { return warnings_; }

  // Appends one increment. Throws when the stream is exhausted or the
  // increment is not a symmetric dim x dim matrix.
  void Insert(const Eigen::MatrixXd& increment);
  // Appends a zero increment.
  void InsertZero();

  // Noisy sum of positions 1..t, 1 <= t <= size(). Pure: repeated calls
  // return identical matrices.
  Eigen::MatrixXd PrefixSum(std::int64_t t) const;
  // PrefixSum(size()), or the zero matrix when nothing was inserted.
  Eigen::MatrixXd CurrentSum() const;

  // Clean partial sum of a node, or nullopt when nothing touched it yet.
  std::optional<Eigen::MatrixXd> CleanSum(int level, std::int64_t index) const;
  // Noise of a completed node, or nullopt when it is not complete yet.
  std::optional<Eigen::MatrixXd> NodeNoise(int level,
                                           std::int64_t index) const;

 private:
  struct Node {
    Eigen::MatrixXd clean;
    Eigen::MatrixXd noise;
    bool touched = false;
    bool complete = false;
  };

  Node& At(int level, std::int64_t index);
  const Node& At(int level, std::int64_t index) const;
  Eigen::MatrixXd SampleNoise();

  std::int64_t horizon_;
  std::int64_t padded_;
  int levels_;
  int dim_;
  double sigma_;
  double sensitivity_;
  std::int64_t next_t_ = 1;
  std::int64_t warnings_ = 0;
  Rng rng_;
  std::vector<std::vector<Node>> nodes_;  // nodes_[level][index]
};

}  // namespace dpglm

#endif  // DPGLM_TREE_MECHANISM_H_
