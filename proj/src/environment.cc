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

#include "dpglm/environment.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpglm {
namespace {

// Stream tags for MixSeed.
constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kPilotStream = 1;
constexpr std::uint64_t kScriptStream = 2;
constexpr std::uint64_t kContextStream = 10;
constexpr std::uint64_t kRewardStream = 11;

void ValidateRecipe(const InstanceRecipe& r) {
  if (r.d < 1 || r.K < 1) throw std::invalid_argument("need d >= 1, K >= 1");
  if (!(r.S >= 0)) throw std::invalid_argument("S must be >= 0");
  if (!(r.R > 0)) throw std::invalid_argument("R must be > 0");
  if (r.pilot_rounds < 1) throw std::invalid_argument("pilot_rounds >= 1");
  if (r.law == ContextLaw::kScripted && r.script_length < 1) {
    throw std::invalid_argument("script_length >= 1");
  }
}

GlmModel ModelFor(const InstanceRecipe& r, Eigen::VectorXd theta_star) {
  GlmModel model;
  model.link = r.link;
  model.theta_star = std::move(theta_star);
  model.reward_bound = r.R;
  model.norm_bound = r.S;
  model.linear_noise = r.linear_noise;
  model.Validate();
  return model;
}

nlohmann::json VectorJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd JsonVector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string_view ContextLawName(ContextLaw law) {
  return law == ContextLaw::kStochastic ? "stochastic" : "scripted";
}

ContextLaw ParseContextLaw(std::string_view name) {
  if (name == "stochastic") return ContextLaw::kStochastic;
  if (name == "scripted" || name == "adversarial") return ContextLaw::kScripted;
  throw std::invalid_argument("unknown context law: " + std::string(name));
}

ArmSet SampleArmSet(int d, int k, Rng& rng) {
  ArmSet arms;
  arms.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) arms.push_back(SampleUnitBall(d, rng));
  return arms;
}

Instance MakeInstance(const InstanceRecipe& recipe) {
  ValidateRecipe(recipe);
  Instance inst;
  inst.recipe = recipe;
  Rng theta_rng(MixSeed(recipe.seed, kThetaStream));
  Eigen::VectorXd theta = recipe.S > 0
                              ? SampleSphere(recipe.d, recipe.S, theta_rng)
                              : Eigen::VectorXd::Zero(recipe.d);
  inst.model = ModelFor(recipe, std::move(theta));
  if (recipe.law == ContextLaw::kScripted) {
    Rng script_rng(MixSeed(recipe.seed, kScriptStream));
    inst.script.reserve(static_cast<std::size_t>(recipe.script_length));
    for (std::int64_t t = 0; t < recipe.script_length; ++t) {
      inst.script.push_back(SampleArmSet(recipe.d, recipe.K, script_rng));
    }
    inst.params = ComputeInstanceParams(inst.model, inst.script, false);
  } else {
    Rng pilot_rng(MixSeed(recipe.seed, kPilotStream));
    std::vector<ArmSet> pilot;
    pilot.reserve(static_cast<std::size_t>(recipe.pilot_rounds));
    for (std::int64_t t = 0; t < recipe.pilot_rounds; ++t) {
      pilot.push_back(SampleArmSet(recipe.d, recipe.K, pilot_rng));
    }
    inst.params = ComputeInstanceParams(inst.model, pilot, true);
  }
  return inst;
}

Instance MakeScriptedInstance(const InstanceRecipe& recipe,
                              const Eigen::VectorXd& theta_star,
                              std::vector<ArmSet> script) {
  ValidateRecipe(recipe);
  if (script.empty()) throw std::invalid_argument("empty script");
  for (const ArmSet& arms : script) {
    if (arms.empty()) throw std::invalid_argument("empty arm set in script");
    for (const Eigen::VectorXd& x : arms) {
      if (x.size() != recipe.d) throw std::invalid_argument("arm dimension");
      if (x.norm() > 1.0 + 1e-12) {
        throw std::invalid_argument("scripted arm outside the unit ball");
      }
    }
  }
  Instance inst;
  inst.recipe = recipe;
  inst.recipe.law = ContextLaw::kScripted;
  inst.recipe.script_length = static_cast<std::int64_t>(script.size());
  inst.model = ModelFor(recipe, theta_star);
  inst.script = std::move(script);
  inst.params = ComputeInstanceParams(inst.model, inst.script, false);
  return inst;
}

Instance SearchInstanceSeed(InstanceRecipe recipe, double target_kappa,
                            int candidates, std::uint64_t first_seed) {
  if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  std::optional<Instance> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int c = 0; c < candidates; ++c) {
    recipe.seed = first_seed + static_cast<std::uint64_t>(c);
    Instance inst = MakeInstance(recipe);
    const double gap = std::abs(std::log(inst.params.kappa / target_kappa));
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(inst);
    }
  }
  return *best;
}

nlohmann::json InstanceToJson(const Instance& instance) {
  const InstanceRecipe& r = instance.recipe;
  nlohmann::json j;
  j["recipe"] = {{"d", r.d},
                 {"K", r.K},
                 {"S", r.S},
                 {"R", r.R},
                 {"link", std::string(LinkName(r.link))},
                 {"law", std::string(ContextLawName(r.law))},
                 {"seed", r.seed},
                 {"script_length", r.script_length},
                 {"pilot_rounds", r.pilot_rounds},
                 {"linear_noise", r.linear_noise}};
  j["theta_star"] = VectorJson(instance.model.theta_star);
  j["params"] = {{"kappa", instance.params.kappa},
                 {"kappa_star_inv", instance.params.kappa_star_inv}};
  if (instance.params.kappa_hat_inv.has_value()) {
    j["params"]["kappa_hat_inv"] = *instance.params.kappa_hat_inv;
  }
  if (r.law == ContextLaw::kScripted) {
    nlohmann::json script = nlohmann::json::array();
    for (const ArmSet& arms : instance.script) {
      nlohmann::json set = nlohmann::json::array();
      for (const Eigen::VectorXd& x : arms) set.push_back(VectorJson(x));
      script.push_back(std::move(set));
    }
    j["script"] = std::move(script);
  }
  return j;
}

Instance InstanceFromJson(const nlohmann::json& j) {
  const nlohmann::json& jr = j.at("recipe");
  InstanceRecipe r;
  r.d = jr.at("d").get<int>();
  r.K = jr.at("K").get<int>();
  r.S = jr.at("S").get<double>();
  r.R = jr.at("R").get<double>();
  r.link = ParseLink(jr.at("link").get<std::string>());
  r.law = ParseContextLaw(jr.at("law").get<std::string>());
  r.seed = jr.at("seed").get<std::uint64_t>();
  r.script_length = jr.at("script_length").get<std::int64_t>();
  r.pilot_rounds = jr.at("pilot_rounds").get<std::int64_t>();
  r.linear_noise = jr.value("linear_noise", 0.1);
  const Eigen::VectorXd theta = JsonVector(j.at("theta_star"));
  if (r.law == ContextLaw::kScripted && j.contains("script")) {
    std::vector<ArmSet> script;
    for (const auto& set : j.at("script")) {
      ArmSet arms;
      for (const auto& x : set) arms.push_back(JsonVector(x));
      script.push_back(std::move(arms));
    }
    return MakeScriptedInstance(r, theta, std::move(script));
  }
  Instance inst = MakeInstance(r);
  if ((inst.model.theta_star - theta).cwiseAbs().maxCoeff() > 0) {
    throw std::runtime_error(
        "stored theta* does not match the regenerated instance");
  }
  return inst;
}

Environment::Environment(const Instance& instance, std::uint64_t run_seed,
                         std::int64_t horizon)
    : instance_(&instance),
      horizon_(horizon),
      context_rng_(MixSeed(run_seed, kContextStream)),
      reward_rng_(MixSeed(run_seed, kRewardStream)) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (instance.recipe.law == ContextLaw::kScripted &&
      static_cast<std::int64_t>(instance.script.size()) < horizon) {
    throw std::invalid_argument("script shorter than the horizon");
  }
}

ArmSet Environment::NextContextSet() {
  if (round_ >= horizon_) {
    throw std::out_of_range("context stream exhausted after " +
                            std::to_string(horizon_) + " rounds");
  }
  const std::int64_t t = round_++;
  if (instance_->recipe.law == ContextLaw::kScripted) {
    return instance_->script[static_cast<std::size_t>(t)];
  }
  return SampleArmSet(instance_->recipe.d, instance_->recipe.K, context_rng_);
}

double Environment::SampleReward(const Eigen::VectorXd& x) {
  return dpglm::SampleReward(instance_->model, x, reward_rng_);
}

double Environment::InstantRegret(const ArmSet& arms,
                                  std::size_t chosen) const {
  if (chosen >= arms.size()) throw std::out_of_range("chosen arm index");
  double best = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x : arms) {
    best = std::max(best, instance_->model.MeanReward(x));
  }
  // Never negative: the chosen arm is part of the maximum.
  return best - instance_->model.MeanReward(arms[chosen]);
}

}  // namespace dpglm
