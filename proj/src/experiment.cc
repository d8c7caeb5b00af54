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

#include "dpglm/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tomlplusplus/toml.hpp"

#include "dpglm/ledger_audit.h"

namespace dpglm {
namespace {

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// TOML access with line-numbered errors.
class TomlReader {
 public:
  explicit TomlReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const toml::node& node, const std::string& what) const {
    throw std::invalid_argument(source_ + ":" +
                                std::to_string(node.source().begin.line) +
                                ": " + what);
  }

  double Double(const toml::node& node, std::string_view key) const {
    if (auto v = node.value<double>()) return *v;
    Fail(node, std::string(key) + " must be a number");
  }

  std::int64_t Int(const toml::node& node, std::string_view key) const {
    if (!node.is_integer()) Fail(node, std::string(key) + " must be an integer");
    return *node.value<std::int64_t>();
  }

  bool Bool(const toml::node& node, std::string_view key) const {
    if (!node.is_boolean()) Fail(node, std::string(key) + " must be a boolean");
    return *node.value<bool>();
  }

  std::string String(const toml::node& node, std::string_view key) const {
    if (!node.is_string()) Fail(node, std::string(key) + " must be a string");
    return *node.value<std::string>();
  }

  // Runs parse and rethrows its std::invalid_argument with line context.
  template <typename F>
  auto Parse(const toml::node& node, F parse) const {
    try {
      return parse();
    } catch (const std::invalid_argument& e) {
      Fail(node, e.what());
    }
  }

 private:
  std::string source_;
};

void ApplyExperimentKey(ExperimentConfig& cfg, const TomlReader& r,
                        std::string_view key, const toml::node& v,
                        std::optional<std::uint64_t>& first_seed,
                        std::optional<std::int64_t>& num_seeds) {
  if (key == "name") {
    cfg.name = r.String(v, key);
  } else if (key == "label") {
    cfg.label = r.String(v, key);
  } else if (key == "algorithm") {
    cfg.algorithm =
        r.Parse(v, [&] { return ParseAlgorithm(r.String(v, key)); });
  } else if (key == "T") {
    cfg.horizon = r.Int(v, key);
  } else if (key == "seeds") {
    const toml::array* arr = v.as_array();
    if (arr == nullptr) r.Fail(v, "seeds must be an array of integers");
    cfg.seeds.clear();
    for (const toml::node& s : *arr) {
      const std::int64_t seed = r.Int(s, "seeds entry");
      if (seed < 0) r.Fail(s, "seeds must be non-negative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  } else if (key == "seed") {
    first_seed = static_cast<std::uint64_t>(r.Int(v, key));
  } else if (key == "num_seeds") {
    num_seeds = r.Int(v, key);
  } else if (key == "out") {
    cfg.out_dir = r.String(v, key);
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(r.Int(v, key));
  } else if (key == "trace") {
    cfg.trace = r.Bool(v, key);
  } else if (key == "channel") {
    cfg.channel =
        r.Parse(v, [&] { return ParseChannelMode(r.String(v, key)); });
  } else {
    r.Fail(v, "unknown key [experiment]." + std::string(key));
  }
}

void ApplyInstanceKey(ExperimentConfig& cfg, const TomlReader& r,
                      std::string_view key, const toml::node& v) {
  InstanceRecipe& ir = cfg.recipe;
  if (key == "d") {
    ir.d = static_cast<int>(r.Int(v, key));
  } else if (key == "K") {
    ir.K = static_cast<int>(r.Int(v, key));
  } else if (key == "S") {
    ir.S = r.Double(v, key);
  } else if (key == "R") {
    ir.R = r.Double(v, key);
  } else if (key == "link") {
    ir.link = r.Parse(v, [&] { return ParseLink(r.String(v, key)); });
  } else if (key == "law") {
    ir.law = r.Parse(v, [&] { return ParseContextLaw(r.String(v, key)); });
  } else if (key == "seed") {
    ir.seed = static_cast<std::uint64_t>(r.Int(v, key));
  } else if (key == "target_kappa") {
    cfg.target_kappa = r.Double(v, key);
  } else if (key == "candidates") {
    cfg.candidates = static_cast<int>(r.Int(v, key));
  } else if (key == "pilot_rounds") {
    ir.pilot_rounds = r.Int(v, key);
  } else if (key == "script_length") {
    ir.script_length = r.Int(v, key);
  } else if (key == "linear_noise") {
    ir.linear_noise = r.Double(v, key);
  } else {
    r.Fail(v, "unknown key [instance]." + std::string(key));
  }
}

// Keys shared by several algorithms are applied to every config that has
// them, so one [algorithm] table serves runs that switch --alg.
void ApplyAlgorithmKey(ExperimentConfig& cfg, const TomlReader& r,
                       std::string_view key, const toml::node& v) {
  JdpConfig& j = cfg.jdp;
  ShuffleGlmConfig& s = cfg.shuffle;
  GlmUcbConfig& u = cfg.glm_ucb;
  auto num = [&] { return r.Double(v, key); };
  auto integer = [&] { return r.Int(v, key); };
  if (key == "eps") {
    j.eps = s.eps = num();
  } else if (key == "delta") {
    j.delta = s.delta = num();
  } else if (key == "zeta") {
    j.zeta = num();
  } else if (key == "kappa") {
    j.kappa = s.kappa = u.kappa = num();
  } else if (key == "kappa_star_inv") {
    j.kappa_star_inv = s.kappa_star_inv = num();
  } else if (key == "lambda") {
    j.lambda = s.lambda = num();
  } else if (key == "ucb_lambda") {
    u.lambda = num();
  } else if (key == "beta") {
    j.beta = num();
  } else if (key == "gamma") {
    j.gamma = s.gamma = num();
  } else if (key == "gamma_root_kappa") {
    j.gamma_root_kappa = num();
  } else if (key == "gamma_lambda_min_frac") {
    j.gamma_lambda_min_frac = num();
  } else if (key == "count1_cutoff") {
    j.count1_cutoff = num();
  } else if (key == "count2_cutoff") {
    j.count2_cutoff = num();
  } else if (key == "count1_scale") {
    j.count1_scale = num();
  } else if (key == "count2_scale") {
    j.count2_scale = num();
  } else if (key == "tree_noise") {
    j.tree_noise = r.Bool(v, key);
  } else if (key == "estimator") {
    j.estimator = r.Parse(v, [&] { return ParseEstimator(r.String(v, key)); });
  } else if (key == "optimizer_channel") {
    j.channel = s.optimizer_channel =
        r.Parse(v, [&] { return ParseSumChannel(r.String(v, key)); });
  } else if (key == "covariance_channel") {
    s.covariance_channel =
        r.Parse(v, [&] { return ParseSumChannel(r.String(v, key)); });
  } else if (key == "channel") {
    cfg.channel =
        r.Parse(v, [&] { return ParseChannelMode(r.String(v, key)); });
  } else if (key == "shuffle_cb") {
    j.shuffle_cb = s.shuffle_cb = num();
  } else if (key == "pgd_iterations") {
    j.pgd_iterations = s.pgd_iterations = integer();
  } else if (key == "pgd_max_iterations") {
    j.pgd_max_iterations = s.pgd_max_iterations = integer();
  } else if (key == "pgd_last_iterate") {
    j.pgd_last_iterate = r.Bool(v, key);
  } else if (key == "lipschitz") {
    j.lipschitz = s.lipschitz = num();
  } else if (key == "norm_checks") {
    j.norm_checks = static_cast<int>(integer());
  } else if (key == "batches") {
    s.batches = static_cast<int>(integer());
  } else if (key == "sigma") {
    s.sigma = num();
  } else if (key == "nu") {
    s.nu = num();
  } else if (key == "alpha") {
    s.alpha = num();
  } else if (key == "b1") {
    s.b1 = integer();
  } else if (key == "width") {
    u.width = num();
  } else if (key == "refit_every") {
    u.refit_every = integer();
  } else {
    r.Fail(v, "unknown key [algorithm]." + std::string(key));
  }
}

nlohmann::json Stats(const std::vector<double>& xs) {
  if (xs.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"max", nullptr}};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd =
      xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return {{"mean", mean},
          {"std", sd},
          {"min", *std::min_element(xs.begin(), xs.end())},
          {"max", *std::max_element(xs.begin(), xs.end())}};
}

std::string InstanceLabel(const ExperimentConfig& cfg, const Instance& inst) {
  if (cfg.target_kappa.has_value()) {
    return "kappa~" + Fmt("%g", *cfg.target_kappa);
  }
  return "S=" + Fmt("%g", inst.recipe.S) + ",seed=" +
         std::to_string(inst.recipe.seed);
}

}  // namespace

std::string_view AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kJdp:
      return "jdp";
    case Algorithm::kShuffle:
      return "shuffle";
    case Algorithm::kGlmUcb:
      return "glm_ucb";
    case Algorithm::kRsNonprivate:
      return "rs_nonprivate";
  }
  return "unknown";
}

Algorithm ParseAlgorithm(std::string_view name) {
  if (name == "jdp") return Algorithm::kJdp;
  if (name == "shuffle" || name == "shuffle_glm") return Algorithm::kShuffle;
  if (name == "glm_ucb" || name == "glmucb") return Algorithm::kGlmUcb;
  if (name == "rs_nonprivate" || name == "rs") return Algorithm::kRsNonprivate;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::string_view ChannelModeName(ChannelMode m) {
  switch (m) {
    case ChannelMode::kFull:
      return "full";
    case ChannelMode::kIdealized:
      return "idealized";
    case ChannelMode::kNoiseOff:
      return "noise-off";
  }
  return "unknown";
}

ChannelMode ParseChannelMode(std::string_view name) {
  if (name == "full" || name == "shuffle") return ChannelMode::kFull;
  if (name == "idealized" || name == "gaussian") return ChannelMode::kIdealized;
  if (name == "noise-off" || name == "off" || name == "exact") {
    return ChannelMode::kNoiseOff;
  }
  throw std::invalid_argument("unknown channel mode: " + std::string(name));
}

void ExperimentConfig::Validate() const {
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) {
    throw std::invalid_argument("duplicate seeds would reuse output paths");
  }
  if (horizon < 2) throw std::invalid_argument("T must be >= 2");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (name.empty() || name.find('/') != std::string::npos) {
    throw std::invalid_argument("name must be non-empty without '/'");
  }
}

double ExperimentConfig::Eps() const {
  switch (algorithm) {
    case Algorithm::kJdp:
    case Algorithm::kRsNonprivate:
      return jdp.eps;
    case Algorithm::kShuffle:
      return shuffle.eps;
    case Algorithm::kGlmUcb:
      return 0.0;
  }
  return 0.0;
}

double ExperimentConfig::Delta() const {
  switch (algorithm) {
    case Algorithm::kJdp:
    case Algorithm::kRsNonprivate:
      return jdp.delta;
    case Algorithm::kShuffle:
      return shuffle.delta;
    case Algorithm::kGlmUcb:
      return 0.0;
  }
  return 0.0;
}

ExperimentConfig ParseExperimentToml(const std::string& text,
                                     const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(source + ":" +
                                std::to_string(e.source().begin.line) + ": " +
                                std::string(e.description()));
  }
  const TomlReader r(source);
  ExperimentConfig cfg;
  std::optional<std::uint64_t> first_seed;
  std::optional<std::int64_t> num_seeds;
  for (const char* section : {"experiment", "instance", "algorithm"}) {
    const toml::node* node = root.get(section);
    if (node == nullptr) continue;
    const toml::table* table = node->as_table();
    if (table == nullptr) r.Fail(*node, std::string(section) + " must be a table");
    for (const auto& [key, value] : *table) {
      const std::string_view k = key.str();
      if (std::string_view(section) == "experiment") {
        ApplyExperimentKey(cfg, r, k, value, first_seed, num_seeds);
      } else if (std::string_view(section) == "instance") {
        ApplyInstanceKey(cfg, r, k, value);
      } else {
        ApplyAlgorithmKey(cfg, r, k, value);
      }
    }
  }
  for (const auto& [key, value] : root) {
    const std::string_view k = key.str();
    if (k != "experiment" && k != "instance" && k != "algorithm") {
      r.Fail(value, "unknown section [" + std::string(k) + "]");
    }
  }
  if (first_seed.has_value() || num_seeds.has_value()) {
    const std::uint64_t s0 = first_seed.value_or(1);
    const std::int64_t n = num_seeds.value_or(1);
    if (n < 1) throw std::invalid_argument(source + ": num_seeds must be >= 1");
    cfg.seeds.clear();
    for (std::int64_t i = 0; i < n; ++i) {
      cfg.seeds.push_back(s0 + static_cast<std::uint64_t>(i));
    }
  }
  try {
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  return ParseExperimentToml(ReadFile(path), path);
}

void ApplyChannelMode(ExperimentConfig& cfg) {
  if (!cfg.channel.has_value()) return;
  switch (*cfg.channel) {
    case ChannelMode::kFull:
      cfg.jdp.tree_noise = true;
      cfg.jdp.channel = SumChannel::kShuffle;
      cfg.shuffle.covariance_channel = SumChannel::kShuffle;
      cfg.shuffle.optimizer_channel = SumChannel::kShuffle;
      break;
    case ChannelMode::kIdealized:
      cfg.jdp.tree_noise = true;
      cfg.jdp.channel = SumChannel::kGaussian;
      cfg.shuffle.covariance_channel = SumChannel::kGaussian;
      cfg.shuffle.optimizer_channel = SumChannel::kGaussian;
      break;
    case ChannelMode::kNoiseOff:
      cfg.jdp.tree_noise = false;
      cfg.jdp.channel = SumChannel::kExact;
      cfg.jdp.estimator = Estimator::kExactMle;
      cfg.shuffle.covariance_channel = SumChannel::kExact;
      cfg.shuffle.optimizer_channel = SumChannel::kExact;
      break;
  }
}

Instance BuildInstance(const ExperimentConfig& cfg) {
  if (cfg.target_kappa.has_value()) {
    return SearchInstanceSeed(cfg.recipe, *cfg.target_kappa, cfg.candidates,
                              cfg.recipe.seed);
  }
  return MakeInstance(cfg.recipe);
}

RegretTranscript RunOne(const ExperimentConfig& cfg, const Instance& instance,
                        std::uint64_t seed) {
  Environment env(instance, seed, cfg.horizon);
  switch (cfg.algorithm) {
    case Algorithm::kJdp:
      return RunJdp(env, cfg.jdp, seed);
    case Algorithm::kShuffle:
      return RunShuffleGlm(env, cfg.shuffle, seed);
    case Algorithm::kGlmUcb:
      return RunGlmUcb(env, cfg.glm_ucb, seed);
    case Algorithm::kRsNonprivate:
      return RunRsNonprivate(env, cfg.jdp, seed);
  }
  throw std::logic_error("unhandled algorithm");
}

nlohmann::json SummarizeOutcomes(const std::vector<SeedOutcome>& outcomes) {
  std::vector<double> regrets, switches, explores;
  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  std::int64_t violations = 0;
  double switch_bound = 0.0, explore_bound = 0.0;
  bool have_switch_bound = false, have_explore_bound = false;
  bool ledger_consistent = true;
  nlohmann::json ledger = nullptr;
  std::string algorithm;
  for (const SeedOutcome& o : outcomes) {
    if (!o.transcript.has_value()) {
      failures.push_back({{"seed", o.seed}, {"error", o.error}});
      continue;
    }
    const RegretTranscript& tr = *o.transcript;
    algorithm = tr.algorithm;
    const double regret = tr.CumulativeRegret();
    regrets.push_back(regret);
    switches.push_back(static_cast<double>(tr.counters.switches));
    explores.push_back(static_cast<double>(tr.counters.explore_rounds));
    violations += static_cast<std::int64_t>(o.violations.size());
    if (tr.bounds.switch_bound.has_value()) {
      switch_bound = have_switch_bound
                         ? std::min(switch_bound, *tr.bounds.switch_bound)
                         : *tr.bounds.switch_bound;
      have_switch_bound = true;
    }
    if (tr.bounds.explore_bound.has_value()) {
      explore_bound = have_explore_bound
                          ? std::min(explore_bound, *tr.bounds.explore_bound)
                          : *tr.bounds.explore_bound;
      have_explore_bound = true;
    }
    const AuditReport audit = PrivacyLedgerCheck(tr);
    ledger_consistent = ledger_consistent && audit.consistent();
    if (ledger.is_null()) ledger = audit.ToJson();
    per_seed.push_back({{"seed", o.seed},
                        {"regret", regret},
                        {"switches", tr.counters.switches},
                        {"explore_rounds", tr.counters.explore_rounds},
                        {"count1", tr.counters.count1},
                        {"count2", tr.counters.count2},
                        {"psd_repairs", tr.counters.psd_repairs},
                        {"violations", o.violations}});
  }
  const nlohmann::json regret_stats = Stats(regrets);
  nlohmann::json s;
  s["algorithm"] = algorithm;
  s["runs"] = regrets.size();
  s["mean_regret"] = regret_stats["mean"];
  s["std_regret"] = regret_stats["std"];
  s["regret"] = regret_stats;
  s["switches"] = Stats(switches);
  s["switches"]["bound"] =
      have_switch_bound ? nlohmann::json(switch_bound) : nlohmann::json();
  s["explore_rounds"] = Stats(explores);
  s["explore_rounds"]["bound"] =
      have_explore_bound ? nlohmann::json(explore_bound) : nlohmann::json();
  s["ledger"] = ledger;
  s["ledger_consistent"] = ledger_consistent;
  s["invariant_violations"] = violations;
  s["failures"] = failures;
  s["per_seed"] = per_seed;
  s["pass"] = violations == 0 && failures.empty() && !regrets.empty() &&
              ledger_consistent;
  return s;
}

std::string TraceCsv(const std::vector<SeedOutcome>& outcomes) {
  std::vector<const RegretTranscript*> runs;
  for (const SeedOutcome& o : outcomes) {
    if (o.transcript.has_value()) runs.push_back(&*o.transcript);
  }
  std::ostringstream out;
  out << "round,mean_cumulative_regret,std_cumulative_regret\n";
  if (runs.empty()) return out.str();
  std::size_t rounds = runs.front()->rounds.size();
  for (const RegretTranscript* r : runs) rounds = std::min(rounds, r->rounds.size());
  const double n = static_cast<double>(runs.size());
  for (std::size_t t = 0; t < rounds; ++t) {
    double mean = 0.0;
    for (const RegretTranscript* r : runs) mean += r->rounds[t].cumulative_regret;
    mean /= n;
    double var = 0.0;
    for (const RegretTranscript* r : runs) {
      const double dev = r->rounds[t].cumulative_regret - mean;
      var += dev * dev;
    }
    const double sd = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    out << (t + 1) << "," << FormatDouble(mean) << "," << FormatDouble(sd)
        << "\n";
  }
  return out.str();
}

ExperimentResult RunExperiment(const ExperimentConfig& input) {
  ExperimentConfig cfg = input;
  cfg.Validate();
  ApplyChannelMode(cfg);
  const Instance instance = BuildInstance(cfg);

  ExperimentResult result;
  result.outcomes.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      SeedOutcome& o = result.outcomes[i];
      o.seed = cfg.seeds[i];
      try {
        o.transcript = RunOne(cfg, instance, o.seed);
        o.violations = CheckInvariants(*o.transcript);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const int workers = std::min<int>(cfg.workers,
                                    static_cast<int>(cfg.seeds.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  nlohmann::json s = SummarizeOutcomes(result.outcomes);
  s["name"] = cfg.name;
  s["label"] = cfg.label.empty() ? std::string(AlgorithmName(cfg.algorithm))
                                 : cfg.label;
  s["algorithm"] = std::string(AlgorithmName(cfg.algorithm));
  s["eps"] = cfg.Eps();
  s["delta"] = cfg.Delta();
  s["horizon"] = cfg.horizon;
  s["seeds"] = cfg.seeds;
  s["channel"] = cfg.channel.has_value()
                     ? nlohmann::json(std::string(ChannelModeName(*cfg.channel)))
                     : nlohmann::json();
  s["instance_label"] = InstanceLabel(cfg, instance);
  s["kappa"] = instance.params.kappa;
  nlohmann::json inst = InstanceToJson(instance);
  inst.erase("script");
  s["instance"] = inst;
  result.summary = s;
  if (cfg.trace) result.trace_csv = TraceCsv(result.outcomes);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + cfg.name;
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
      const SeedOutcome& o = result.outcomes[i];
      if (!o.transcript.has_value()) continue;
      const std::string stem = base + "_seed" + std::to_string(o.seed);
      WriteFile(stem + ".csv", RoundsToCsv(*o.transcript));
      WriteFile(stem + ".json", SidecarToJson(*o.transcript).dump(2) + "\n");
      result.summary["per_seed"][i]["csv"] = stem + ".csv";
      result.summary["per_seed"][i]["sidecar"] = stem + ".json";
    }
    if (cfg.trace) WriteFile(base + "_trace.csv", result.trace_csv);
    WriteFile(base + "_summary.json", result.summary.dump(2) + "\n");
  }
  return result;
}

nlohmann::json ReplayTranscripts(
    const std::vector<std::pair<std::string, std::string>>& csv_and_sidecar) {
  std::vector<SeedOutcome> outcomes;
  for (const auto& [csv, sidecar] : csv_and_sidecar) {
    RegretTranscript tr = SidecarFromJson(nlohmann::json::parse(ReadFile(sidecar)));
    try {
      tr.rounds = RoundsFromCsv(ReadFile(csv));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(csv + ": " + e.what());
    }
    SeedOutcome o;
    o.seed = tr.seed;
    o.violations = CheckInvariants(tr);
    o.transcript = std::move(tr);
    outcomes.push_back(std::move(o));
  }
  return SummarizeOutcomes(outcomes);
}

CompareResult CompareReport(const std::vector<nlohmann::json>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("no summaries to compare");
  struct Cell {
    double mean = 0.0;
    double sd = 0.0;
  };
  // row key -> column label -> cell
  std::map<std::string, std::map<std::string, Cell>> rows;
  std::map<std::string, std::pair<std::string, double>> row_meta;  // label, eps
  std::map<std::string, double> column_kappa;
  for (const nlohmann::json& s : summaries) {
    const std::string label = s.value("label", s.value("algorithm", "?"));
    const double eps = s.value("eps", 0.0);
    const std::string row =
        eps > 0 ? label + " eps=" + Fmt("%g", eps) : label;
    const std::string col = s.value("instance_label", "instance");
    if (s.at("mean_regret").is_null()) {
      throw std::invalid_argument("summary " + row + " has no finished runs");
    }
    if (rows[row].count(col) != 0) {
      throw std::invalid_argument("duplicate cell " + row + " / " + col);
    }
    rows[row][col] = {s.at("mean_regret").get<double>(),
                      s.at("std_regret").get<double>()};
    row_meta[row] = {label, eps};
    column_kappa[col] = s.value("kappa", 0.0);
  }
  std::vector<std::string> cols;
  for (const auto& [c, k] : column_kappa) cols.push_back(c);
  std::sort(cols.begin(), cols.end(), [&](const auto& a, const auto& b) {
    return column_kappa[a] < column_kappa[b];
  });
  for (const auto& [row, cells] : rows) {
    if (cells.size() != cols.size()) {
      throw std::invalid_argument("row " + row +
                                  " does not cover the shared instance grid");
    }
  }

  CompareResult out;
  std::ostringstream t;
  t << "algorithm";
  for (const std::string& c : cols) {
    t << " | " << c << " (kappa " << Fmt("%.2f", column_kappa[c]) << ")";
  }
  t << "\n";
  nlohmann::json row_flags = nlohmann::json::object();
  for (const auto& [row, cells] : rows) {
    t << row;
    std::vector<double> means;
    for (const std::string& c : cols) {
      const Cell& cell = cells.at(c);
      t << " | " << Fmt("%.2f", cell.mean) << " +- " << Fmt("%.2f", cell.sd);
      means.push_back(cell.mean);
    }
    t << "\n";
    bool increasing = means.size() > 1;
    for (std::size_t i = 1; i < means.size(); ++i) {
      increasing = increasing && means[i] > means[i - 1];
    }
    const double lo = *std::min_element(means.begin(), means.end());
    const double hi = *std::max_element(means.begin(), means.end());
    const double spread = lo > 0 ? (hi - lo) / lo : 0.0;
    row_flags[row] = {{"increasing_in_kappa", increasing},
                      {"relative_spread", spread},
                      {"flat_within_10pct", spread <= 0.10}};
  }

  // Regret against eps, per label and instance.
  nlohmann::json eps_flags = nlohmann::json::object();
  std::map<std::string, std::vector<std::pair<double, std::string>>> by_label;
  for (const auto& [row, meta] : row_meta) {
    if (meta.second > 0) by_label[meta.first].push_back({meta.second, row});
  }
  for (auto& [label, list] : by_label) {
    if (list.size() < 2) continue;
    std::sort(list.begin(), list.end());
    bool ok = true;
    for (const std::string& c : cols) {
      for (std::size_t i = 1; i < list.size(); ++i) {
        const Cell& a = rows[list[i - 1].second][c];
        const Cell& b = rows[list[i].second][c];
        const double pooled = std::sqrt((a.sd * a.sd + b.sd * b.sd) / 2.0);
        ok = ok && b.mean <= a.mean + pooled;
      }
    }
    eps_flags[label] = {{"non_increasing_in_eps_within_pooled_std", ok}};
  }
  out.table = t.str();
  out.flags = {{"rows", row_flags}, {"eps_trend", eps_flags}};
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dpglm
