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

#include "dpglm/tree_mechanism.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace dpglm {
namespace {

constexpr std::int64_t kMaxHorizon = std::int64_t{1} << 20;

int Log2Exact(std::int64_t power_of_two) {
  int h = 0;
  while ((std::int64_t{1} << h) < power_of_two) ++h;
  return h;
}

}  // namespace

std::int64_t PaddedHorizon(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  std::int64_t p = 1;
  while (p < horizon) p <<= 1;
  return p;
}

int TreeLevels(std::int64_t horizon) {
  return Log2Exact(PaddedHorizon(horizon)) + 1;
}

std::vector<DyadicInterval> Decomposition(std::int64_t t,
                                          std::int64_t padded_horizon) {
  if (t < 1 || t > padded_horizon) {
    throw std::out_of_range("prefix length " + std::to_string(t) +
                            " outside [1, " + std::to_string(padded_horizon) +
                            "]");
  }
  std::vector<DyadicInterval> out;
  std::int64_t pos = 0;
  for (int h = Log2Exact(padded_horizon); h >= 0; --h) {
    const std::int64_t width = std::int64_t{1} << h;
    if (pos + width <= t) {
      out.push_back(DyadicInterval{pos + 1, pos + width, h, pos >> h});
      pos += width;
    }
  }
  return out;
}

std::vector<DyadicInterval> PathIntervals(std::int64_t leaf,
                                          std::int64_t padded_horizon) {
  if (leaf < 1 || leaf > padded_horizon) {
    throw std::out_of_range("leaf outside the tree");
  }
  std::vector<DyadicInterval> out;
  const int top = Log2Exact(padded_horizon);
  for (int h = 0; h <= top; ++h) {
    const std::int64_t index = (leaf - 1) >> h;
    const std::int64_t width = std::int64_t{1} << h;
    out.push_back(
        DyadicInterval{index * width + 1, (index + 1) * width, h, index});
  }
  return out;
}

double SigmaFromBudget(double eps, double delta, std::int64_t horizon,
                       double sensitivity) {
  if (!(eps > 0) || !(delta > 0)) {
    throw std::invalid_argument("tree budget needs eps > 0 and delta > 0");
  }
  if (!(sensitivity >= 0)) {
    throw std::invalid_argument("sensitivity must be >= 0");
  }
  const double m = TreeLevels(horizon);
  return 6.0 * std::sqrt(m) * std::log(32.0 / delta) * sensitivity / eps;
}

NoisyPrefixTree::NoisyPrefixTree(std::int64_t horizon, int dim, double sigma,
                                 std::uint64_t seed, double sensitivity)
    : horizon_(horizon),
      padded_(0),
      levels_(0),
      dim_(dim),
      sigma_(sigma),
      sensitivity_(sensitivity),
      rng_(seed) {
  if (horizon < 1 || horizon > kMaxHorizon) {
    throw std::invalid_argument("tree horizon must lie in [1, 2^20]");
  }
  if (dim < 1) throw std::invalid_argument("tree dimension must be >= 1");
  if (!(sigma >= 0)) throw std::invalid_argument("sigma must be >= 0");
  padded_ = PaddedHorizon(horizon);
  levels_ = TreeLevels(horizon);
  nodes_.resize(static_cast<std::size_t>(levels_));
  for (int h = 0; h < levels_; ++h) {
    nodes_[static_cast<std::size_t>(h)].resize(
        static_cast<std::size_t>(padded_ >> h));
  }
}

NoisyPrefixTree::Node& NoisyPrefixTree::At(int level, std::int64_t index) {
  return nodes_.at(static_cast<std::size_t>(level))
      .at(static_cast<std::size_t>(index));
}

const NoisyPrefixTree::Node& NoisyPrefixTree::At(int level,
                                                 std::int64_t index) const {
  return nodes_.at(static_cast<std::size_t>(level))
      .at(static_cast<std::size_t>(index));
}

Eigen::MatrixXd NoisyPrefixTree::SampleNoise() {
  std::normal_distribution<double> normal(0.0, sigma_);
  Eigen::MatrixXd z(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    for (int i = 0; i < dim_; ++i) z(i, j) = normal(rng_);
  }
  return 0.5 * (z + z.transpose());
}

void NoisyPrefixTree::Insert(const Eigen::MatrixXd& increment) {
  if (next_t_ > horizon_) throw std::out_of_range("tree stream exhausted");
  if (increment.rows() != dim_ || increment.cols() != dim_) {
    throw std::invalid_argument("tree increment has the wrong shape");
  }
  const double scale = std::max(1.0, increment.cwiseAbs().maxCoeff());
  if ((increment - increment.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale) {
    throw std::invalid_argument("tree increment is not symmetric");
  }
  if (std::isfinite(sensitivity_) && !increment.isZero(0.0)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        increment, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().cwiseAbs().maxCoeff() >
        sensitivity_ * (1 + 1e-9)) {
      ++warnings_;
    }
  }
  for (const DyadicInterval& iv : PathIntervals(next_t_, padded_)) {
    Node& node = At(iv.level, iv.index);
    if (!node.touched) {
      node.clean = Eigen::MatrixXd::Zero(dim_, dim_);
      node.touched = true;
    }
    node.clean += increment;
    if (iv.last == next_t_) {
      node.complete = true;
      node.noise = sigma_ > 0 ? SampleNoise()
                              : Eigen::MatrixXd::Zero(dim_, dim_);
    }
  }
  ++next_t_;
}

void NoisyPrefixTree::InsertZero() {
  Insert(Eigen::MatrixXd::Zero(dim_, dim_));
}

Eigen::MatrixXd NoisyPrefixTree::PrefixSum(std::int64_t t) const {
  if (t < 1 || t > size()) {
    throw std::out_of_range("prefix query " + std::to_string(t) +
                            " outside [1, " + std::to_string(size()) + "]");
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const DyadicInterval& iv : Decomposition(t, padded_)) {
    const Node& node = At(iv.level, iv.index);
    sum += node.clean;
    if (sigma_ > 0) sum += node.noise;
  }
  return sum;
}

Eigen::MatrixXd NoisyPrefixTree::CurrentSum() const {
  if (size() == 0) return Eigen::MatrixXd::Zero(dim_, dim_);
  return PrefixSum(size());
}

std::optional<Eigen::MatrixXd> NoisyPrefixTree::CleanSum(
    int level, std::int64_t index) const {
  const Node& node = At(level, index);
  if (!node.touched) return std::nullopt;
  return node.clean;
}

std::optional<Eigen::MatrixXd> NoisyPrefixTree::NodeNoise(
    int level, std::int64_t index) const {
  const Node& node = At(level, index);
  if (!node.complete) return std::nullopt;
  return node.noise;
}

}  // namespace dpglm
