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

#include "dpglm/shuffle_sum.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpglm {
namespace {

constexpr double kMagnitudeSlack = 1e-12;

double EncodedRange(const ProtocolParams& params) {
  return 2.0 * params.delta_cap;
}

void CheckPooled(const PooledCounts& pooled, const ProtocolParams& params,
                 std::size_t num_labels) {
  if (pooled.counts.size() != num_labels) {
    throw std::invalid_argument("pooled counts have the wrong label count");
  }
  const std::int64_t max_count = pooled.users * (params.g + params.b);
  for (std::int64_t count : pooled.counts) {
    if (count < 0 || count > max_count) {
      throw std::out_of_range("pooled count outside [0, n (g + b)]");
    }
  }
}

double Debias(std::int64_t count, std::int64_t users,
              const ProtocolParams& params) {
  const double range = EncodedRange(params);
  const double noise_mean =
      params.p * static_cast<double>(params.b) * static_cast<double>(users);
  return range / static_cast<double>(params.g) *
             (static_cast<double>(count) - noise_mean) -
         static_cast<double>(users) * params.delta_cap;
}

}  // namespace

ProtocolParams DeriveProtocolParams(std::int64_t n, int d, double eps,
                                    double delta, double c_b,
                                    double delta_cap) {
  if (!(eps > 0 && eps <= 15)) {
    throw std::invalid_argument("shuffle protocol needs 0 < eps <= 15");
  }
  if (!(delta > 0 && delta < 0.5)) {
    throw std::invalid_argument("shuffle protocol needs 0 < delta < 1/2");
  }
  if (n < 1 || d < 1) throw std::invalid_argument("need n >= 1 and d >= 1");
  if (!(c_b > 0 && c_b <= 1)) {
    throw std::invalid_argument("c_b must lie in (0, 1]");
  }
  if (!(delta_cap > 0)) throw std::invalid_argument("cap must be positive");
  ProtocolParams params;
  params.n = n;
  params.d = d;
  params.delta_cap = delta_cap;
  params.p = 0.25;
  const auto root = static_cast<std::int64_t>(
      std::ceil(2.0 * std::sqrt(static_cast<double>(n))));
  params.g = std::max<std::int64_t>({root, d, 4});
  const double g = static_cast<double>(params.g);
  const double log_term =
      std::log(4.0 * (static_cast<double>(d) * d + 1.0) / delta);
  const double b = c_b * 24e4 * g * g * log_term * log_term /
                   (eps * eps * static_cast<double>(n));
  params.b = static_cast<std::int64_t>(std::ceil(b));
  return params;
}

std::size_t MatrixLabelCount(int d) {
  return static_cast<std::size_t>(d) * (d + 1) / 2;
}

std::size_t MatrixLabel(int i, int j, int d) {
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 contribute d, d-1, ..., d-i+1 labels.
  return static_cast<std::size_t>(i) * d - static_cast<std::size_t>(i) *
                                               (i - 1) / 2 +
         static_cast<std::size_t>(j - i);
}

ShuffleMessage ScalarRandomize(double x, double range,
                               const ProtocolParams& params, Rng& rng,
                               std::size_t label) {
  if (!(range > 0)) throw std::invalid_argument("range must be positive");
  const double slack = kMagnitudeSlack * range;
  if (!(x >= -slack && x <= range + slack)) {
    throw std::out_of_range("value " + std::to_string(x) +
                            " outside [0, " + std::to_string(range) + "]");
  }
  x = std::clamp(x, 0.0, range);
  const double scaled = x * static_cast<double>(params.g) / range;
  const double floor_value = std::floor(scaled);
  auto count = static_cast<std::int64_t>(floor_value);
  const double frac = scaled - floor_value;
  if (frac > 0) {
    std::bernoulli_distribution round_up(frac);
    if (round_up(rng)) ++count;
  }
  if (params.b > 0) {
    std::binomial_distribution<std::int64_t> blanket(params.b, params.p);
    count += blanket(rng);
  }
  return ShuffleMessage{label, count};
}

ShuffleMessage ScalarRandomize(double x, const ProtocolParams& params,
                               Rng& rng) {
  return ScalarRandomize(x, params.delta_cap, params, rng);
}

std::vector<ShuffleMessage> RandomizeVector(const Eigen::VectorXd& v,
                                            const ProtocolParams& params,
                                            Rng& rng) {
  if (v.size() != params.d) {
    throw std::invalid_argument("vector dimension does not match params");
  }
  if (v.size() > 0 &&
      v.cwiseAbs().maxCoeff() > params.delta_cap * (1 + kMagnitudeSlack)) {
    throw std::out_of_range("vector entry exceeds the magnitude cap");
  }
  std::vector<ShuffleMessage> messages;
  messages.reserve(static_cast<std::size_t>(params.d));
  for (int k = 0; k < params.d; ++k) {
    messages.push_back(ScalarRandomize(v(k) + params.delta_cap,
                                       EncodedRange(params), params, rng,
                                       static_cast<std::size_t>(k)));
  }
  return messages;
}

std::vector<ShuffleMessage> RandomizeMatrix(const Eigen::MatrixXd& x,
                                            const ProtocolParams& params,
                                            Rng& rng) {
  if (x.rows() != params.d || x.cols() != params.d) {
    throw std::invalid_argument("matrix dimension does not match params");
  }
  if ((x - x.transpose()).cwiseAbs().maxCoeff() >
      kMagnitudeSlack * std::max(1.0, x.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("matrix randomizer needs a symmetric input");
  }
  if (x.cwiseAbs().maxCoeff() > params.delta_cap * (1 + kMagnitudeSlack)) {
    throw std::out_of_range("matrix entry exceeds the magnitude cap");
  }
  std::vector<ShuffleMessage> messages;
  messages.reserve(MatrixLabelCount(params.d));
  for (int i = 0; i < params.d; ++i) {
    for (int j = i; j < params.d; ++j) {
      messages.push_back(ScalarRandomize(x(i, j) + params.delta_cap,
                                         EncodedRange(params), params, rng,
                                         MatrixLabel(i, j, params.d)));
    }
  }
  return messages;
}

PooledCounts Shuffle(const std::vector<std::vector<ShuffleMessage>>& users,
                     std::size_t num_labels) {
  PooledCounts pooled;
  pooled.counts.assign(num_labels, 0);
  pooled.users = static_cast<std::int64_t>(users.size());
  std::vector<int> seen(num_labels);
  for (const auto& messages : users) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const ShuffleMessage& m : messages) {
      if (m.label >= num_labels) {
        throw std::invalid_argument("message label out of range");
      }
      ++seen[m.label];
      pooled.counts[m.label] += m.ones_count;
    }
    for (int s : seen) {
      if (s != 1) {
        throw std::invalid_argument(
            "every user must send each label exactly once");
      }
    }
  }
  return pooled;
}

PooledCounts ShuffleMaterialized(
    const std::vector<std::vector<ShuffleMessage>>& users,
    std::size_t num_labels, const ProtocolParams& params, Rng& rng) {
  // Validates label coverage.
  const PooledCounts reference = Shuffle(users, num_labels);
  struct Bit {
    std::size_t label;
    bool one;
  };
  std::vector<Bit> bits;
  const auto per_message = static_cast<std::size_t>(params.g + params.b);
  bits.reserve(users.size() * num_labels * per_message);
  for (const auto& messages : users) {
    for (const ShuffleMessage& m : messages) {
      const auto ones = static_cast<std::size_t>(m.ones_count);
      if (ones > per_message) {
        throw std::out_of_range("message has more than g + b ones");
      }
      for (std::size_t k = 0; k < per_message; ++k) {
        bits.push_back(Bit{m.label, k < ones});
      }
    }
  }
  std::shuffle(bits.begin(), bits.end(), rng);
  PooledCounts pooled;
  pooled.users = reference.users;
  pooled.counts.assign(num_labels, 0);
  for (const Bit& bit : bits) {
    if (bit.one) ++pooled.counts[bit.label];
  }
  return pooled;
}

Eigen::VectorXd AnalyzeVector(const PooledCounts& pooled,
                              const ProtocolParams& params) {
  CheckPooled(pooled, params, static_cast<std::size_t>(params.d));
  Eigen::VectorXd out(params.d);
  for (int k = 0; k < params.d; ++k) {
    out(k) = Debias(pooled.counts[static_cast<std::size_t>(k)], pooled.users,
                    params);
  }
  return out;
}

Eigen::MatrixXd AnalyzeMatrix(const PooledCounts& pooled,
                              const ProtocolParams& params) {
  CheckPooled(pooled, params, MatrixLabelCount(params.d));
  Eigen::MatrixXd out(params.d, params.d);
  for (int i = 0; i < params.d; ++i) {
    for (int j = i; j < params.d; ++j) {
      const double value =
          Debias(pooled.counts[MatrixLabel(i, j, params.d)], pooled.users,
                 params);
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

nlohmann::json PooledCountsToJson(const PooledCounts& pooled,
                                  const ProtocolParams& params) {
  nlohmann::json j;
  j["params"] = {{"g", params.g},         {"b", params.b},
                 {"p", params.p},         {"n", params.n},
                 {"delta_cap", params.delta_cap}, {"d", params.d}};
  j["users"] = pooled.users;
  j["counts"] = pooled.counts;
  return j;
}

double BlanketNoiseVariance(const ProtocolParams& params) {
  const double step = EncodedRange(params) / static_cast<double>(params.g);
  return static_cast<double>(params.n) * static_cast<double>(params.b) *
         params.p * (1.0 - params.p) * step * step;
}

Eigen::VectorXd ShuffledVectorSum(const std::vector<Eigen::VectorXd>& inputs,
                                  const ProtocolParams& params, Rng& rng) {
  std::vector<std::vector<ShuffleMessage>> users;
  users.reserve(inputs.size());
  for (const Eigen::VectorXd& v : inputs) {
    users.push_back(RandomizeVector(v, params, rng));
  }
  return AnalyzeVector(Shuffle(users, static_cast<std::size_t>(params.d)),
                       params);
}

Eigen::MatrixXd ShuffledMatrixSum(const std::vector<Eigen::MatrixXd>& inputs,
                                  const ProtocolParams& params, Rng& rng) {
  std::vector<std::vector<ShuffleMessage>> users;
  users.reserve(inputs.size());
  for (const Eigen::MatrixXd& x : inputs) {
    users.push_back(RandomizeMatrix(x, params, rng));
  }
  return AnalyzeMatrix(Shuffle(users, MatrixLabelCount(params.d)), params);
}

}  // namespace dpglm
