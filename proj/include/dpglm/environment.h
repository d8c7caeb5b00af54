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

// Synthetic bandit instances and context streams.
//
// An instance fixes theta* (uniform on the radius-S sphere) and, for scripted
// streams, the full sequence of arm sets. An Environment replays an instance
// for one run seed: contexts and rewards come from separate streams derived
// from that seed.

#ifndef DPGLM_ENVIRONMENT_H_
#define DPGLM_ENVIRONMENT_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dpglm/glm.h"
#include "dpglm/random.h"

namespace dpglm {

enum class ContextLaw {
  // Fresh K arms uniform in the unit ball every round.
  kStochastic,
  // A frozen sequence of arm sets, identical for every run seed.
  kScripted,
};

std::string_view ContextLawName(ContextLaw law);
ContextLaw ParseContextLaw(std::string_view name);

struct InstanceRecipe {
  int d = 3;
  int K = 20;
  double S = 1.0;
  double R = 1.0;
  LinkKind link = LinkKind::kProbit;
  ContextLaw law = ContextLaw::kStochastic;
  std::uint64_t seed = 1;
  // Length of generated scripts.
  std::int64_t script_length = 1000;
  // Number of arm sets drawn to estimate kappa and friends.
  std::int64_t pilot_rounds = 2000;
  double linear_noise = 0.1;
};

struct Instance {
  InstanceRecipe recipe;
  GlmModel model;
  // Realized non-linearity parameters over the pilot draw (or the script).
  InstanceParams params;
  // Only for scripted streams.
  std::vector<ArmSet> script;
};

// Deterministic in recipe.seed. Throws on invalid recipes.
Instance MakeInstance(const InstanceRecipe& recipe);

// Hand-written adversarial stream: the script is used as given.
Instance MakeScriptedInstance(const InstanceRecipe& recipe,
                              const Eigen::VectorXd& theta_star,
                              std::vector<ArmSet> script);

// Tries seeds first_seed, first_seed + 1, ... and returns the instance whose
// realized kappa is closest to target_kappa.
Instance SearchInstanceSeed(InstanceRecipe recipe, double target_kappa,
                            int candidates, std::uint64_t first_seed = 1);

nlohmann::json InstanceToJson(const Instance& instance);
// Rebuilds the instance. Stochastic instances are regenerated from the
// recipe and checked against the stored theta*.
Instance InstanceFromJson(const nlohmann::json& j);

class Environment {
 public:
  Environment(const Instance& instance, std::uint64_t run_seed,
              std::int64_t horizon);

  const GlmModel& model() const { return instance_->model; }
  const Instance& instance() const { return *instance_; }
  int dim() const { return instance_->recipe.d; }
  std::int64_t horizon() const { return horizon_; }
  std::int64_t round() const { return round_; }

  // Arm set of the next round. Throws std::out_of_range past the horizon.
  ArmSet NextContextSet();
  double SampleReward(const Eigen::VectorXd& x);

  // max_y mu(<y, theta*>) - mu(<x, theta*>) over the round's arm set.
  double InstantRegret(const ArmSet& arms, std::size_t chosen) const;

 private:
  const Instance* instance_;
  std::int64_t horizon_;
  std::int64_t round_ = 0;
  Rng context_rng_;
  Rng reward_rng_;
};

// Fresh K arms uniform in the unit ball.
ArmSet SampleArmSet(int d, int k, Rng& rng);

}  // namespace dpglm

#endif  // DPGLM_ENVIRONMENT_H_
