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

#include "dpglm/algo_jdp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dpglm/random.h"
#include "dpglm/tree_mechanism.h"

namespace dpglm {
namespace {

constexpr std::uint64_t kTreeVStream = 20;
constexpr std::uint64_t kTreeHStream = 21;
constexpr std::uint64_t kOptimizerStream = 22;
constexpr std::uint64_t kProbeStream = 23;

// Argmax with ties to the lowest index.
template <typename F>
std::size_t ArgMax(std::size_t n, F score) {
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = score(i);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

double SpectralNorm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void RequirePositive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) +
                                " must be positive and finite");
  }
}

}  // namespace

std::string_view EstimatorName(Estimator e) {
  return e == Estimator::kPgd ? "pgd" : "exact";
}

Estimator ParseEstimator(std::string_view name) {
  if (name == "pgd") return Estimator::kPgd;
  if (name == "exact" || name == "mle") return Estimator::kExactMle;
  throw std::invalid_argument("unknown estimator: " + std::string(name));
}

double JdpParams::GammaRootKappa() const { return gamma * std::sqrt(kappa); }

nlohmann::json JdpParams::ToJson() const {
  return {{"horizon", horizon},
          {"d", d},
          {"R", R},
          {"S", S},
          {"kappa", kappa},
          {"kappa_star_inv", kappa_star_inv},
          {"lambda", lambda},
          {"lambda_min", lambda_min},
          {"lambda_max", lambda_max},
          {"beta", beta},
          {"gamma", gamma},
          {"gamma_root_kappa", GammaRootKappa()},
          {"count1_cutoff", count1_cutoff},
          {"count2_cutoff", count2_cutoff},
          {"eps_o1", eps_o1},
          {"delta_o1", delta_o1},
          {"eps_o2", eps_o2},
          {"delta_o2", delta_o2},
          {"sensitivity_v", sensitivity_v},
          {"sensitivity_h", sensitivity_h},
          {"sigma_v", sigma_v},
          {"sigma_h", sigma_h},
          {"switch_bound", switch_bound},
          {"explore_bound", explore_bound}};
}

JdpParams DeriveJdpParams(const JdpConfig& cfg, const GlmModel& model,
                          const InstanceParams& instance,
                          std::int64_t horizon) {
  RequirePositive(cfg.eps, "eps");
  if (!(cfg.delta > 0 && cfg.delta < 1)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(cfg.zeta > 0 && cfg.zeta < 1)) {
    throw std::invalid_argument("zeta must lie in (0, 1)");
  }
  if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");

  JdpParams p;
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
  const double eps = cfg.eps;
  const double delta = cfg.delta;
  const double zeta = cfg.zeta;
  const double root = 4.0 * std::sqrt(d);

  p.lambda = cfg.lambda.value_or(
      64.0 * (root + 1.0) * std::log(32.0 / delta) * std::log(t) *
      (std::log(16.0 * t / zeta) + std::sqrt(d)) * p.kappa_star_inv / eps);
  p.beta = cfg.beta.value_or(p.R * p.S * std::sqrt(d) * std::log(t / zeta) *
                             std::log(1.0 / delta) *
                             std::sqrt(p.kappa_star_inv / eps));
  p.lambda_min = p.lambda * root / (root + 1.0);
  p.lambda_max = p.lambda * (root + 2.0) / (root + 1.0);
  if (cfg.gamma_lambda_min_frac.has_value()) {
    p.gamma = *cfg.gamma_lambda_min_frac * std::sqrt(p.lambda_min / p.kappa);
  } else if (cfg.gamma_root_kappa.has_value()) {
    p.gamma = *cfg.gamma_root_kappa / std::sqrt(p.kappa);
  } else {
    p.gamma = cfg.gamma.value_or(
        std::pow(p.R, 5) * std::pow(p.S, 4) * d *
        std::pow(std::log(t * d / zeta), 2) * std::log(32.0 / delta) *
        p.kappa_star_inv * p.kappa_star_inv / std::min(eps, 1.0));
  }
  RequirePositive(p.lambda, "lambda");
  if (!(p.beta >= 0)) throw std::invalid_argument("beta must be >= 0");
  RequirePositive(p.gamma, "gamma");

  p.explore_bound = 8.0 * d * p.R * p.R * p.kappa * p.gamma * p.gamma *
                    std::log(t);
  p.count1_cutoff =
      cfg.count1_cutoff.value_or(cfg.count1_scale * p.explore_bound);
  p.count2_cutoff = cfg.count2_cutoff.value_or(
      cfg.count2_scale *
      std::log2(p.lambda_max / p.lambda_min +
                t * p.kappa_star_inv * p.kappa_star_inv / (p.lambda_min * d)));
  RequirePositive(p.count1_cutoff, "count1_cutoff");
  RequirePositive(p.count2_cutoff, "count2_cutoff");

  const double log4 = std::log(4.0 / delta);
  p.eps_o1 = eps / (6.0 * std::sqrt(2.0 * p.count1_cutoff * log4));
  p.delta_o1 = delta / (6.0 * p.count1_cutoff);
  p.eps_o2 = eps / (6.0 * std::sqrt(2.0 * p.count2_cutoff * log4));
  p.delta_o2 = delta / (6.0 * p.count2_cutoff);

  p.sensitivity_v = 1.0;
  p.sensitivity_h = p.kappa_star_inv;
  if (cfg.tree_noise) {
    p.sigma_v = SigmaFromBudget(eps, delta, horizon, p.sensitivity_v);
    p.sigma_h = SigmaFromBudget(eps, delta, horizon, p.sensitivity_h);
  }
  p.switch_bound = d * std::log2(2.0 + 2.0 * t / (p.lambda_min * d));
  return p;
}

bool CriterionI(const ArmSet& arms, const DesignMatrix& v, double gamma,
                double kappa, double reward_bound) {
  if (arms.empty()) throw std::invalid_argument("empty arm set");
  const double threshold =
      1.0 / (gamma * gamma * kappa * reward_bound * reward_bound);
  double best = 0.0;
  for (const Eigen::VectorXd& x : arms) {
    const double n = v.InverseNorm(x);
    best = std::max(best, n * n);
  }
  return best >= threshold;
}

bool SwitchTracker::ShouldSwitch() const {
  return running_max_ > at_last_switch_ + std::log(2.0);
}

double OptimisticIndex(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       const DesignMatrix& m, double width) {
  return x.dot(theta) + width * m.InverseNorm(x);
}

namespace {

class JdpRun {
 public:
  JdpRun(Environment& env, const JdpConfig& cfg, std::uint64_t seed)
      : env_(env),
        cfg_(cfg),
        link_(env.model().link),
        p_(DeriveJdpParams(cfg, env.model(), env.instance().params,
                           env.horizon())),
        tree_v_(env.horizon(), p_.d, p_.sigma_v, MixSeed(seed, kTreeVStream),
                p_.sensitivity_v),
        tree_h_(env.horizon(), p_.d, p_.sigma_h, MixSeed(seed, kTreeHStream),
                p_.sensitivity_h),
        opt_rng_(MixSeed(seed, kOptimizerStream)),
        probe_rng_(MixSeed(seed, kProbeStream)),
        lambda_i_(p_.lambda * Eigen::MatrixXd::Identity(p_.d, p_.d)),
        clean_h_(Eigen::MatrixXd::Zero(p_.d, p_.d)),
        theta_o_(Eigen::VectorXd::Zero(p_.d)),
        theta_tau_(Eigen::VectorXd::Zero(p_.d)),
        h_tau_(DesignMatrix::Regularized(p_.d, p_.lambda)),
        h_tau_noise_(Eigen::MatrixXd::Zero(p_.d, p_.d)),
        tracker_(h_tau_.LogDet()) {
    h_tau_.set_eigen_floor(p_.lambda_min);
    tr_.algorithm = cfg.name;
    tr_.seed = seed;
    tr_.horizon = env.horizon();
    tr_.eps = cfg.eps;
    tr_.delta = cfg.delta;
  }

  RegretTranscript Run() {
    const std::int64_t horizon = env_.horizon();
    const std::int64_t stride =
        cfg_.norm_checks > 0 ? std::max<std::int64_t>(1, horizon / cfg_.norm_checks)
                             : 0;
    for (std::int64_t t = 1; t <= horizon; ++t) Step(t, stride);
    Finish();
    return std::move(tr_);
  }

 private:
  DesignMatrix Released(const NoisyPrefixTree& tree) {
    DesignMatrix m(lambda_i_ + tree.CurrentSum(), p_.lambda_min);
    if (m.Repair()) ++tr_.counters.psd_repairs;
    return m;
  }

  Eigen::VectorXd Fit(const std::vector<Observation>& data,
                      const ConvexFeasibleSet& set, double eps_o,
                      double delta_o, const Eigen::VectorXd& previous) {
    const double n = static_cast<double>(data.size());
    if (cfg_.estimator == Estimator::kExactMle) {
      MleOptions options;
      options.warm_start = previous;
      try {
        return MleExact(link_, data, p_.lambda_max, set, options);
      } catch (const std::runtime_error&) {
        ++tr_.counters.estimator_failures;
        return set.Project(previous);
      }
    }
    PgdConfig pc;
    pc.eps = eps_o;
    pc.delta = delta_o;
    pc.ridge_per_point = p_.lambda_max / n;
    double theta_bound = p_.S;
    if (set.kind() == ConvexFeasibleSet::Kind::kEllipsoid) {
      theta_bound = set.center().norm() + 0.5 * set.Diameter();
    }
    pc.lipschitz = cfg_.lipschitz.value_or(p_.R + pc.ridge_per_point *
                                                         theta_bound);
    pc.channel = cfg_.channel;
    pc.shuffle_cb = cfg_.shuffle_cb;
    pc.iterations = cfg_.pgd_iterations;
    pc.max_iterations = cfg_.pgd_max_iterations;
    pc.average_iterates = !cfg_.pgd_last_iterate;
    const PgdResult r = PgdRun(link_, data, set, pc, opt_rng_);
    tr_.counters.clipped_gradients += r.clipped;
    return r.theta;
  }

  void Step(std::int64_t t, std::int64_t stride) {
    const ArmSet arms = env_.NextContextSet();
    const DesignMatrix v = Released(tree_v_);
    const Eigen::MatrixXd h_raw = lambda_i_ + tree_h_.CurrentSum();
    const DesignMatrix h = Released(tree_h_);
    tracker_.Observe(h.LogDet());

    RoundRecord rec;
    rec.context_hash = ContextHash(arms);
    std::size_t chosen = 0;

    if (CriterionI(arms, v, p_.gamma, p_.kappa, p_.R)) {
      chosen = ArgMax(arms.size(),
                      [&](std::size_t i) { return v.InverseNorm(arms[i]); });
      const Eigen::VectorXd& x = arms[chosen];
      const double r = env_.SampleReward(x);
      rec.reward = r;
      rec.explore = true;
      ++tr_.counters.explore_rounds;
      explore_data_.push_back({x, r});
      tree_v_.Insert(x * x.transpose());
      tree_h_.InsertZero();
      if (static_cast<double>(tr_.counters.count1 + 1) <= p_.count1_cutoff) {
        theta_o_ = Fit(explore_data_,
                       ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(p_.d), p_.S),
                       p_.eps_o1, p_.delta_o1, theta_o_);
        ++tr_.counters.count1;
      }
      if (!switched_) theta_tau_ = theta_o_;
    } else {
      if (tracker_.ShouldSwitch()) {
        tracker_.MarkSwitch();
        switched_ = true;
        rec.policy_switch = true;
        ++tr_.counters.switches;
        ++epoch_;
        h_tau_ = h;
        h_tau_noise_ = h_raw - lambda_i_ - clean_h_;
        if (!exploit_data_.empty() &&
            static_cast<double>(tr_.counters.count2 + 1) <= p_.count2_cutoff) {
          const ConvexFeasibleSet set = ConvexFeasibleSet::Ellipsoid(
              theta_o_, v.matrix(), p_.GammaRootKappa());
          theta_tau_ = Fit(exploit_data_, set, p_.eps_o2, p_.delta_o2,
                           set.Project(theta_tau_));
          ++tr_.counters.count2;
        }
      }

      // Elimination with the exploration estimate.
      const double width = p_.GammaRootKappa();
      std::vector<double> ucb(arms.size());
      double max_lcb = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < arms.size(); ++i) {
        const double center = arms[i].dot(theta_o_);
        const double w = width * v.InverseNorm(arms[i]);
        ucb[i] = center + w;
        max_lcb = std::max(max_lcb, center - w);
      }
      std::vector<std::size_t> survivors;
      for (std::size_t i = 0; i < arms.size(); ++i) {
        if (ucb[i] >= max_lcb) survivors.push_back(i);
      }
      if (survivors.empty()) {
        ++tr_.counters.elimination_guards;
        survivors.push_back(ArgMax(arms.size(),
                                   [&](std::size_t i) { return ucb[i]; }));
      }
      const std::size_t pick = ArgMax(survivors.size(), [&](std::size_t i) {
        return OptimisticIndex(arms[survivors[i]], theta_tau_, h_tau_, p_.beta);
      });
      chosen = survivors[pick];
      const Eigen::VectorXd& x = arms[chosen];
      const double r = env_.SampleReward(x);
      rec.reward = r;
      exploit_data_.push_back({x, r});
      const double weight = MuDot(link_, x.dot(theta_o_)) / std::exp(1.0);
      const Eigen::MatrixXd inc = weight * x * x.transpose();
      tree_h_.Insert(inc);
      clean_h_ += inc;
      tree_v_.InsertZero();

      if (stride > 0 && switched_ && t % stride == 0 &&
          tr_.counters.norm_checks + tr_.counters.norm_check_excluded <
              cfg_.norm_checks) {
        Probe(h, h_raw);
      }
    }

    rec.arm_index = static_cast<std::int64_t>(chosen);
    rec.instant_regret = env_.InstantRegret(arms, chosen);
    rec.policy_epoch = epoch_;
    tr_.Append(rec);
  }

  // Checks ||y||_{H_tau^-1} <= (10/3) sqrt(e) ||y||_{H_s^-1} for a random y
  // when both noise terms are small enough for the property to apply.
  void Probe(const DesignMatrix& h, const Eigen::MatrixXd& h_raw) {
    const double limit =
        p_.lambda / (4.0 * (std::sqrt(static_cast<double>(p_.d)) + 1.0));
    const Eigen::MatrixXd noise = h_raw - lambda_i_ - clean_h_;
    const Eigen::VectorXd y = SampleSphere(p_.d, 1.0, probe_rng_);
    if (SpectralNorm(noise) > limit || SpectralNorm(h_tau_noise_) > limit) {
      ++tr_.counters.norm_check_excluded;
      return;
    }
    ++tr_.counters.norm_checks;
    const double factor = (10.0 / 3.0) * std::sqrt(std::exp(1.0));
    if (h_tau_.InverseNorm(y) > factor * h.InverseNorm(y) * (1.0 + 1e-12)) {
      ++tr_.counters.norm_check_failures;
    }
  }

  void Finish() {
    Counters& c = tr_.counters;
    c.sensitivity_warnings =
        tree_v_.sensitivity_warnings() + tree_h_.sensitivity_warnings();
    tr_.bounds.switch_bound = p_.switch_bound;
    tr_.bounds.explore_bound = p_.explore_bound;
    tr_.bounds.count1_cutoff = p_.count1_cutoff;
    tr_.bounds.count2_cutoff = p_.count2_cutoff;

    const std::int64_t last = env_.horizon();
    auto tree_entry = [&](const char* name, const NoisyPrefixTree& tree) {
      LedgerEntry e;
      e.mechanism = name;
      e.eps_share = {1, 6};
      e.delta_share = {1, 6};
      e.eps = cfg_.eps / 6.0;
      e.delta = cfg_.delta / 6.0;
      e.first_round = 1;
      e.last_round = last;
      e.is_private = tree.sigma() > 0;
      e.details = {{"kind", "tree"},
                   {"sigma", tree.sigma()},
                   {"sensitivity", tree.sensitivity()},
                   {"horizon", tree.horizon()},
                   {"levels", tree.levels()}};
      return e;
    };
    tr_.ledger.push_back(tree_entry("tree_V", tree_v_));
    tr_.ledger.push_back(tree_entry("tree_H", tree_h_));

    LedgerEntry sw;
    sw.mechanism = "switching";
    sw.eps_share = {1, 3};
    sw.delta_share = {1, 3};
    sw.eps = cfg_.eps / 3.0;
    sw.delta = cfg_.delta / 3.0;
    sw.first_round = 1;
    sw.last_round = last;
    sw.is_private = cfg_.tree_noise;
    sw.details = {{"kind", "claimed"}};
    tr_.ledger.push_back(sw);

    const bool private_opt = cfg_.estimator == Estimator::kPgd &&
                             cfg_.channel != SumChannel::kExact;
    auto opt_entry = [&](const char* name, double eps_o, double delta_o,
                         double cutoff, std::int64_t calls) {
      LedgerEntry e;
      e.mechanism = name;
      e.eps_share = {1, 6};
      e.delta_share = {1, 6};
      e.eps = cfg_.eps / 6.0;
      e.delta = cfg_.delta / 6.0;
      e.first_round = 1;
      e.last_round = last;
      e.is_private = private_opt;
      e.details = {{"kind", "optimizer_calls"},
                   {"eps_o", eps_o},
                   {"delta_o", delta_o},
                   {"cutoff", cutoff},
                   {"calls", calls},
                   {"estimator", std::string(EstimatorName(cfg_.estimator))},
                   {"channel", std::string(SumChannelName(cfg_.channel))}};
      return e;
    };
    tr_.ledger.push_back(opt_entry("optimizer_explore", p_.eps_o1, p_.delta_o1,
                                   p_.count1_cutoff, c.count1));
    tr_.ledger.push_back(opt_entry("optimizer_policy", p_.eps_o2, p_.delta_o2,
                                   p_.count2_cutoff, c.count2));

    tr_.settings = {{"params", p_.ToJson()},
                    {"tree_noise", cfg_.tree_noise},
                    {"estimator", std::string(EstimatorName(cfg_.estimator))},
                    {"channel", std::string(SumChannelName(cfg_.channel))},
                    {"explore_set_size", explore_data_.size()},
                    {"theta_o", std::vector<double>(theta_o_.data(),
                                                    theta_o_.data() + p_.d)},
                    {"theta_tau",
                     std::vector<double>(theta_tau_.data(),
                                         theta_tau_.data() + p_.d)}};
  }

  Environment& env_;
  const JdpConfig& cfg_;
  LinkKind link_;
  JdpParams p_;
  NoisyPrefixTree tree_v_;
  NoisyPrefixTree tree_h_;
  Rng opt_rng_;
  Rng probe_rng_;
  Eigen::MatrixXd lambda_i_;
  Eigen::MatrixXd clean_h_;
  Eigen::VectorXd theta_o_;
  Eigen::VectorXd theta_tau_;
  DesignMatrix h_tau_;
  Eigen::MatrixXd h_tau_noise_;
  SwitchTracker tracker_;
  bool switched_ = false;
  std::int64_t epoch_ = 0;
  std::vector<Observation> explore_data_;
  std::vector<Observation> exploit_data_;
  RegretTranscript tr_;
};

}  // namespace

RegretTranscript RunJdp(Environment& env, const JdpConfig& cfg,
                        std::uint64_t seed) {
  JdpRun run(env, cfg, seed);
  return run.Run();
}

}  // namespace dpglm
