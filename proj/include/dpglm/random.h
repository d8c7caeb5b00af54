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

#ifndef DPGLM_RANDOM_H_
#define DPGLM_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dpglm {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent stream seeds from a run
// seed and a stream tag.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Eigen::VectorXd SampleGaussianVector(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

// Uniform on the sphere of the given radius.
inline Eigen::VectorXd SampleSphere(int dim, double radius, Rng& rng) {
  Eigen::VectorXd v = SampleGaussianVector(dim, rng);
  double norm = v.norm();
  while (norm == 0.0) {
    v = SampleGaussianVector(dim, rng);
    norm = v.norm();
  }
  return v * (radius / norm);
}

// Uniform in the closed unit ball.
inline Eigen::VectorXd SampleUnitBall(int dim, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd direction = SampleSphere(dim, 1.0, rng);
  return direction * std::pow(unif(rng), 1.0 / dim);
}

}  // namespace dpglm

#endif  // DPGLM_RANDOM_H_
