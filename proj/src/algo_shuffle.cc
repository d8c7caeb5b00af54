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

#include "dpglm/algo_shuffle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dpglm/g_optimal_design.h"
#include "dpglm/random.h"
#include "dpglm/shuffle_sum.h"

namespace dpglm {
namespace {

constexpr std::uint64_t kDesignStream = 30;
constexpr std::uint64_t kCovarianceStream = 31;
constexpr std::uint64_t kOptimizerStream = 32;

void RequirePositive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) +
                                " must be positive and finite");
  }
}

}  // namespace

std::int64_t BatchSchedule::Total() const {
  std::int64_t total = 0;
  for (std::int64_t b : lengths) total += b;
  return total;
}

nlohmann::json BatchSchedule::ToJson() const {
  return {{"M", M}, {"alpha", alpha}, {"lengths", lengths}};
}

double DefaultAlpha(std::int64_t horizon, int batches) {
  if (batches < 2) throw std::invalid_argument("need at least two batches");
  const double exponent = 1.0 / (2.0 * (1.0 - std::pow(2.0, 1 - batches)));
  return std::pow(static_cast<double>(horizon), exponent);
}

double WarmupLength(double kappa, double gamma, double norm_bound, int d,
                    double alpha) {
  RequirePositive(norm_bound, "S (warm-up length)");
  const double dd = static_cast<double>(d);
  const double inner = std::sqrt(kappa) * std::exp(3.0 * norm_bound) * dd *
                       dd * gamma * gamma / norm_bound * alpha;
  return std::pow(inner, 2.0 / 3.0);
}

BatchSchedule MakeBatchSchedule(std::int64_t horizon, int batches,
                                double kappa, double gamma,
                                double norm_bound, int d,
                                std::optional<double> alpha,
                                std::optional<std::int64_t> b1) {
  if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
  if (batches < 2) throw std::invalid_argument("need at least two batches");
  // With M = 2 the default alpha is T itself, so B_2 alone fills the
  // horizon and no warm-up fits.
  if (batches == 2 && !alpha.has_value()) {
    throw std::invalid_argument(
        "batch schedule infeasible: M = 2 makes the default alpha equal T; "
        "use M >= 3 or set alpha");
  }
  BatchSchedule s;
  s.alpha = alpha.value_or(DefaultAlpha(horizon, batches));
  RequirePositive(s.alpha, "alpha");

  double first = 0.0;
  if (b1.has_value()) {
    first = static_cast<double>(*b1);
  } else {
    first = std::ceil(WarmupLength(kappa, gamma, norm_bound, d, s.alpha));
  }
  if (!(first >= 1)) throw std::invalid_argument("warm-up batch is empty");
  if (!(first < static_cast<double>(horizon))) {
    throw std::invalid_argument(
        "warm-up batch B1 = " + std::to_string(first) +
        " does not fit the horizon; use a smaller gamma, a B1 override or a "
        "larger T");
  }
  std::vector<double> raw = {first, std::ceil(s.alpha)};
  for (int k = 3; k <= batches; ++k) {
    raw.push_back(std::ceil(s.alpha * std::sqrt(raw.back())));
  }
  double used = 0.0;
  for (int k = 0; k + 1 < batches; ++k) {
    used += raw[static_cast<std::size_t>(k)];
    s.lengths.push_back(static_cast<std::int64_t>(raw[static_cast<std::size_t>(k)]));
  }
  if (!(used < static_cast<double>(horizon))) {
    throw std::invalid_argument(
        "batch schedule infeasible: the first M-1 batches need " +
        std::to_string(used) + " rounds but T = " + std::to_string(horizon));
  }
  s.lengths.push_back(horizon - static_cast<std::int64_t>(used));
  s.M = batches;
  return s;
}

double BetaScaling(const Eigen::VectorXd& x, const DesignMatrix& v,
                   double gamma, double kappa, double reward_bound,
                   double norm_bound) {
  const double spread = gamma * std::sqrt(kappa) * v.InverseNorm(x);
  return std::exp(reward_bound * std::min(2.0 * norm_bound, spread));
}

ScaledArms ScaleArms(const ArmSet& arms, LinkKind link,
                     const Eigen::VectorXd& theta_1, const DesignMatrix& v,
                     double gamma, double kappa, double reward_bound,
                     double norm_bound, double weight_cap) {
  ScaledArms out;
  out.arms.reserve(arms.size());
  out.weights.reserve(arms.size());
  for (const Eigen::VectorXd& x : arms) {
    double w = MuDot(link, x.dot(theta_1)) /
               BetaScaling(x, v, gamma, kappa, reward_bound, norm_bound);
    if (w > weight_cap) {
      w = weight_cap;
      ++out.clamps;
    }
    out.weights.push_back(w);
    out.arms.push_back(std::sqrt(w) * x);
  }
  return out;
}

std::pair<double, double> UcbLcb(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& theta,
                                 const DesignMatrix& v, double width) {
  const double center = x.dot(theta);
  const double w = width * v.InverseNorm(x);
  return {center + w, center - w};
}

std::vector<std::size_t> Eliminate(const ArmSet& arms,
                                   const std::vector<BatchBounds>& history) {
  if (arms.empty()) throw std::invalid_argument("empty arm set");
  std::vector<std::size_t> alive(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) alive[i] = i;
  for (const BatchBounds& b : history) {
    std::vector<std::pair<double, double>> bounds;
    bounds.reserve(alive.size());
    double max_lcb = -std::numeric_limits<double>::infinity();
    for (std::size_t i : alive) {
      bounds.push_back(UcbLcb(arms[i], b.theta, b.v, b.width));
      max_lcb = std::max(max_lcb, bounds.back().second);
    }
    std::vector<std::size_t> next;
    for (std::size_t j = 0; j < alive.size(); ++j) {
      // The arm holding max_lcb has ucb >= lcb = max_lcb, so next is never
      // empty.
      if (!(bounds[j].first < max_lcb)) next.push_back(alive[j]);
    }
    alive = std::move(next);
  }
  return alive;
}

double ShuffleGlmParams::GammaRootKappa() const {
  return gamma * std::sqrt(kappa);
}

nlohmann::json ShuffleGlmParams::ToJson() const {
  return {{"horizon", horizon},
          {"d", d},
          {"R", R},
          {"S", S},
          {"kappa", kappa},
          {"kappa_star_inv", kappa_star_inv},
          {"sigma", sigma},
          {"nu", nu},
          {"lambda", lambda},
          {"gamma", gamma},
          {"gamma_root_kappa", GammaRootKappa()},
          {"lambda_min", lambda_min},
          {"lambda_max", lambda_max},
          {"schedule", schedule.ToJson()}};
}

ShuffleGlmParams DeriveShuffleGlmParams(const ShuffleGlmConfig& cfg,
                                        const GlmModel& model,
                                        const InstanceParams& instance,
                                        std::int64_t horizon) {
  if (!(cfg.eps > 0 && cfg.eps < 5)) {
    throw std::invalid_argument("shuffle GLM needs 0 < eps < 5");
  }
  if (!(cfg.delta > 0 && cfg.delta < 0.5)) {
    throw std::invalid_argument("shuffle GLM needs 0 < delta < 1/2");
  }
  if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
  ShuffleGlmParams p;
  p.horizon = horizon;
  p.d = static_cast<int>(model.theta_star.size());
  p.R = cfg.reward_bound.value_or(model.reward_bound);
  p.S = cfg.norm_bound.value_or(model.norm_bound);
  p.kappa = cfg.kappa.value_or(instance.kappa);
  p.kappa_star_inv = cfg.kappa_star_inv.value_or(instance.kappa_star_inv);
  RequirePositive(p.R, "R");
  RequirePositive(p.kappa, "kappa");
  RequirePositive(p.kappa_star_inv, "1/kappa*");
  if (!(p.S >= 0)) throw std::invalid_argument("S must be >= 0");

  const double d = p.d;
  const double t = static_cast<double>(horizon);
  const double m = cfg.batches;
  const double eps = cfg.eps;
  const double delta = cfg.delta;
  const double log_d2 = std::log(d * d / delta);

  p.sigma = cfg.sigma.value_or(p.R * log_d2 * p.kappa_star_inv / eps);
  p.nu = cfg.nu.value_or(p.R * p.S * p.S / eps *
                         std::sqrt(d * std::pow(std::log(t * d / delta), 3)));
  const double log_union = std::log(2.0 * d * m * t / delta);
  p.lambda = cfg.lambda.value_or(20.0 * d * p.R * std::log(t) +
                                 p.sigma * 6.0 * std::sqrt(log_union));
  p.gamma = cfg.gamma.value_or(
      30.0 * p.R * p.S *
          std::sqrt(d * p.R * std::log(t) +
                    12.0 * p.sigma * std::sqrt(log_union)) +
      std::sqrt(4.0 * p.R * p.S * p.nu));
  RequirePositive(p.lambda, "lambda");
  RequirePositive(p.gamma, "gamma");
  // The spread covers the covariance noise and vanishes without it.
  const double spread =
      cfg.covariance_channel == SumChannel::kExact
          ? 0.0
          : 8.0 * p.R * log_d2 * p.kappa_star_inv / eps *
                        (std::sqrt(d) + 6.0 * std::sqrt(std::log(2.0 * m * t /
                                                                 delta)));
  p.lambda_min = p.lambda - spread;
  p.lambda_max = p.lambda + spread;
  if (!(p.lambda_min > 0)) {
    throw std::invalid_argument(
        "lambda_min = lambda - noise spread is not positive; raise lambda");
  }
  p.schedule = MakeBatchSchedule(horizon, cfg.batches, p.kappa, p.gamma, p.S,
                                 p.d, cfg.alpha, cfg.b1);
  return p;
}

namespace {

class ShuffleRun {
 public:
  ShuffleRun(Environment& env, const ShuffleGlmConfig& cfg,
             std::uint64_t seed)
      : env_(env),
        cfg_(cfg),
        link_(env.model().link),
        p_(DeriveShuffleGlmParams(cfg, env.model(), env.instance().params,
                                  env.horizon())),
        design_rng_(MixSeed(seed, kDesignStream)),
        cov_rng_(MixSeed(seed, kCovarianceStream)),
        opt_rng_(MixSeed(seed, kOptimizerStream)),
        v_(DesignMatrix::Regularized(p_.d, p_.lambda)),
        theta_1_(Eigen::VectorXd::Zero(p_.d)) {
    if (env.instance().recipe.law != ContextLaw::kStochastic) {
      throw std::invalid_argument("shuffle GLM needs stochastic contexts");
    }
    tr_.algorithm = cfg.name;
    tr_.seed = seed;
    tr_.horizon = env.horizon();
    tr_.eps = cfg.eps;
    tr_.delta = cfg.delta;
  }

  RegretTranscript Run() {
    std::int64_t first = 1;
    for (std::size_t k = 0; k < p_.schedule.lengths.size(); ++k) {
      const std::int64_t len = p_.schedule.lengths[k];
      RunBatch(static_cast<int>(k) + 1, first, first + len - 1);
      first += len;
    }
    tr_.settings = {
        {"params", p_.ToJson()},
        {"covariance_channel",
         std::string(SumChannelName(cfg_.covariance_channel))},
        {"optimizer_channel",
         std::string(SumChannelName(cfg_.optimizer_channel))},
        {"shuffle_cb", cfg_.shuffle_cb},
        {"theta_1",
         std::vector<double>(theta_1_.data(), theta_1_.data() + p_.d)}};
    return std::move(tr_);
  }

 private:
  // Sum of the users' matrices through the configured channel at budget
  // (eps / 2, delta / 2) and entry bound cap.
  Eigen::MatrixXd Covariance(const std::vector<Eigen::MatrixXd>& mats,
                             double cap, nlohmann::json& details) {
    const auto n = static_cast<std::int64_t>(mats.size());
    details = {{"kind", "shuffle_sum"},
               {"channel", std::string(SumChannelName(cfg_.covariance_channel))},
               {"users", n},
               {"d", p_.d},
               {"cap", cap},
               {"c_b", cfg_.shuffle_cb}};
    Eigen::MatrixXd exact = Eigen::MatrixXd::Zero(p_.d, p_.d);
    for (const Eigen::MatrixXd& m : mats) exact += m;
    if (cfg_.covariance_channel == SumChannel::kExact) return exact;
    const ProtocolParams pp = DeriveProtocolParams(
        n, p_.d, cfg_.eps / 2.0, cfg_.delta / 2.0, cfg_.shuffle_cb, cap);
    details["g"] = pp.g;
    details["b"] = pp.b;
    details["p"] = pp.p;
    if (cfg_.covariance_channel == SumChannel::kShuffle) {
      return ShuffledMatrixSum(mats, pp, cov_rng_);
    }
    const double sd = std::sqrt(BlanketNoiseVariance(pp));
    details["noise_sd"] = sd;
    std::normal_distribution<double> normal(0.0, sd);
    for (int i = 0; i < p_.d; ++i) {
      for (int j = i; j < p_.d; ++j) {
        const double z = normal(cov_rng_);
        exact(i, j) += z;
        if (j != i) exact(j, i) += z;
      }
    }
    return exact;
  }

  Eigen::VectorXd Fit(const std::vector<Observation>& data,
                      nlohmann::json& details) {
    const double n = static_cast<double>(data.size());
    PgdConfig pc;
    pc.eps = cfg_.eps / 2.0;
    pc.delta = cfg_.delta / 2.0;
    pc.ridge_per_point = p_.lambda_max / n;
    pc.lipschitz =
        cfg_.lipschitz.value_or(p_.R + pc.ridge_per_point * p_.S);
    pc.channel = cfg_.optimizer_channel;
    pc.shuffle_cb = cfg_.shuffle_cb;
    pc.iterations = cfg_.pgd_iterations;
    pc.max_iterations = cfg_.pgd_max_iterations;
    const PgdResult r =
        PgdRun(link_, data,
               ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(p_.d), p_.S), pc,
               opt_rng_);
    tr_.counters.clipped_gradients += r.clipped;
    details = {{"kind", "pgd"},
               {"channel", std::string(SumChannelName(cfg_.optimizer_channel))},
               {"users", data.size()},
               {"iterations", r.iterations},
               {"step_eps", r.step_eps},
               {"step_delta", r.step_delta},
               {"lipschitz", pc.lipschitz},
               {"noise_sigma", r.gradient_noise_sigma}};
    return r.theta;
  }

  void RunBatch(int k, std::int64_t first, std::int64_t last) {
    const double cap = k == 1 ? 1.0 : p_.kappa_star_inv;
    std::vector<Eigen::MatrixXd> mats;
    std::vector<Observation> data;
    mats.reserve(static_cast<std::size_t>(last - first + 1));
    data.reserve(mats.capacity());
    for (std::int64_t t = first; t <= last; ++t) {
      const ArmSet arms = env_.NextContextSet();
      RoundRecord rec;
      rec.context_hash = ContextHash(arms);
      rec.policy_epoch = k - 1;
      std::size_t chosen = 0;
      double weight = 1.0;
      if (k == 1) {
        const DesignDistribution dist = GOptimal(arms);
        chosen = dist.indices[SampleSupportIndex(dist, design_rng_)];
        rec.explore = true;
        ++tr_.counters.explore_rounds;
      } else {
        if (t == first) {
          rec.policy_switch = true;
          ++tr_.counters.switches;
        }
        const std::vector<std::size_t> alive = Eliminate(arms, history_);
        ArmSet kept;
        kept.reserve(alive.size());
        for (std::size_t i : alive) kept.push_back(arms[i]);
        const ScaledArms scaled =
            ScaleArms(kept, link_, theta_1_, v_, p_.gamma, p_.kappa, p_.R,
                      p_.S, p_.kappa_star_inv);
        tr_.counters.clamps += scaled.clamps;
        const DesignDistribution dist = GOptimal(scaled.arms);
        const std::size_t j = dist.indices[SampleSupportIndex(dist, design_rng_)];
        chosen = alive[j];
        weight = scaled.weights[j];
      }
      const Eigen::VectorXd& x = arms[chosen];
      const double r = env_.SampleReward(x);
      mats.push_back(weight * x * x.transpose());
      data.push_back({x, r});
      rec.reward = r;
      rec.arm_index = static_cast<std::int64_t>(chosen);
      rec.instant_regret = env_.InstantRegret(arms, chosen);
      tr_.Append(rec);
    }

    LedgerEntry cov;
    cov.mechanism = k == 1 ? "covariance_V" : "covariance_H";
    Eigen::MatrixXd sum = Covariance(mats, cap, cov.details);
    DesignMatrix m(sum + p_.lambda * Eigen::MatrixXd::Identity(p_.d, p_.d),
                   p_.lambda_min);
    if (m.Repair()) ++tr_.counters.psd_repairs;

    LedgerEntry opt;
    opt.mechanism = "optimizer";
    const Eigen::VectorXd theta = Fit(data, opt.details);
    ++tr_.counters.count2;
    if (k == 1) {
      theta_1_ = theta;
      v_ = m;
    }
    history_.push_back({theta, m, p_.GammaRootKappa()});

    BatchInfo info;
    info.index = k;
    info.first_round = first;
    info.last_round = last;
    info.delta_cap = cap;
    info.users = last - first + 1;
    tr_.batches.push_back(info);

    for (LedgerEntry* e : {&cov, &opt}) {
      e->group = k;
      e->eps_share = {1, 2};
      e->delta_share = {1, 2};
      e->eps = cfg_.eps / 2.0;
      e->delta = cfg_.delta / 2.0;
      e->first_round = first;
      e->last_round = last;
    }
    cov.is_private = cfg_.covariance_channel != SumChannel::kExact;
    opt.is_private = cfg_.optimizer_channel != SumChannel::kExact;
    tr_.ledger.push_back(std::move(cov));
    tr_.ledger.push_back(std::move(opt));
  }

  Environment& env_;
  const ShuffleGlmConfig& cfg_;
  LinkKind link_;
  ShuffleGlmParams p_;
  Rng design_rng_;
  Rng cov_rng_;
  Rng opt_rng_;
  DesignMatrix v_;
  Eigen::VectorXd theta_1_;
  std::vector<BatchBounds> history_;
  RegretTranscript tr_;
};

}  // namespace

RegretTranscript RunShuffleGlm(Environment& env, const ShuffleGlmConfig& cfg,
                               std::uint64_t seed) {
  ShuffleRun run(env, cfg, seed);
  return run.Run();
}

}  // namespace dpglm
