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

// Seeded multi-run experiments: TOML configs, a bounded worker pool,
// per-seed transcripts, summaries and comparison tables.
//
// Config layout:
//
//   [experiment]  name, label, algorithm, T, seeds | seed + num_seeds, out,
//                 workers, trace
//   [instance]    d, K, S, R, link, law, seed, target_kappa, candidates,
//                 pilot_rounds, script_length, linear_noise
//   [algorithm]   eps, delta, channel, and the knobs of the chosen
//                 algorithm (see ApplyAlgorithmKey in experiment.cc)

#ifndef DPGLM_EXPERIMENT_H_
#define DPGLM_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dpglm/algo_jdp.h"
#include "dpglm/algo_shuffle.h"
#include "dpglm/baselines.h"
#include "dpglm/environment.h"
#include "dpglm/transcript.h"

namespace dpglm {

enum class Algorithm { kJdp, kShuffle, kGlmUcb, kRsNonprivate };

std::string_view AlgorithmName(Algorithm a);
Algorithm ParseAlgorithm(std::string_view name);

// Which noise every channel of a run uses.
enum class ChannelMode {
  kFull,       // the shuffle protocol wherever the algorithm has one
  kIdealized,  // Gaussian stand-ins with matched variance
  kNoiseOff,   // exact sums and no tree noise
};

std::string_view ChannelModeName(ChannelMode m);
ChannelMode ParseChannelMode(std::string_view name);

struct ExperimentConfig {
  std::string name = "run";
  // Row label in comparison tables. Empty: the algorithm name.
  std::string label;
  Algorithm algorithm = Algorithm::kJdp;
  std::int64_t horizon = 5000;
  std::vector<std::uint64_t> seeds = {1};
  InstanceRecipe recipe;
  // When set, the instance seed is searched over `candidates` seeds
  // starting at recipe.seed for the realized kappa closest to this.
  std::optional<double> target_kappa;
  int candidates = 20;
  std::optional<ChannelMode> channel;
  JdpConfig jdp;
  ShuffleGlmConfig shuffle;
  GlmUcbConfig glm_ucb;
  // Output directory. Empty: nothing is written.
  std::string out_dir;
  int workers = 1;
  bool trace = true;

  // Throws std::invalid_argument on an empty seed list, duplicate seeds,
  // T < 2 or workers < 1.
  void Validate() const;
  // Budget of the configured algorithm; zero for GLM-UCB.
  double Eps() const;
  double Delta() const;
};

// Parses a TOML config. Errors are std::invalid_argument with
// "<source>:<line>:" context.
ExperimentConfig ParseExperimentToml(const std::string& text,
                                     const std::string& source = "config");
ExperimentConfig LoadExperimentConfig(const std::string& path);

// Applies the channel mode to the algorithm configs.
void ApplyChannelMode(ExperimentConfig& cfg);

Instance BuildInstance(const ExperimentConfig& cfg);

// One seeded run of the configured algorithm.
RegretTranscript RunOne(const ExperimentConfig& cfg, const Instance& instance,
                        std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<RegretTranscript> transcript;
  std::string error;  // non-empty when the run threw
  std::vector<std::string> violations;
};

struct ExperimentResult {
  std::vector<SeedOutcome> outcomes;  // in seed-list order
  nlohmann::json summary;
  // round, mean cumulative regret, std.
  std::string trace_csv;
};

// Summary of finished transcripts: mean and std of the final cumulative
// regret, switch and exploration statistics, ledger audit, invariant
// violations. "pass" is true only with zero violations and zero failures.
nlohmann::json SummarizeOutcomes(const std::vector<SeedOutcome>& outcomes);

// Mean and sample std of cumulative regret per round across transcripts.
std::string TraceCsv(const std::vector<SeedOutcome>& outcomes);

// Runs every seed on `workers` threads. Results merge in seed-list order,
// so output is independent of scheduling. A failing seed is recorded and
// the others still run. Writes <out>/<name>_seed<s>.csv and .json,
// <name>_summary.json and <name>_trace.csv when out_dir is set.
ExperimentResult RunExperiment(const ExperimentConfig& cfg);

// Reloads per-seed transcripts (CSV plus sidecar) and summarizes them.
nlohmann::json ReplayTranscripts(
    const std::vector<std::pair<std::string, std::string>>& csv_and_sidecar);

struct CompareResult {
  std::string table;
  nlohmann::json flags;
};

// Algorithm x instance table of mean +- std regret. Rows are keyed by
// label and eps, columns by instance label. Throws std::invalid_argument
// when fewer than one summary is given or the rows cover different
// instance sets.
CompareResult CompareReport(const std::vector<nlohmann::json>& summaries);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace dpglm

#endif  // DPGLM_EXPERIMENT_H_
