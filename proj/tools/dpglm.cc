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

// dpglm: run, compare, audit and replay bandit experiments.
//
// Exit codes: 0 success, 1 invariant violation or failed check, 2 bad
// usage or config.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpglm/experiment.h"
#include "dpglm/ledger_audit.h"
#include "dpglm/transcript.h"

namespace {

using dpglm::ExperimentConfig;

struct RunOptions {
  std::string config;
  std::optional<std::string> alg;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<std::int64_t> horizon;
  std::optional<int> d;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> seeds;
  std::optional<std::string> link;
  std::optional<double> s;
  std::optional<std::string> channel;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> name;
};

void ApplyOverrides(const RunOptions& o, ExperimentConfig& cfg) {
  if (o.alg) cfg.algorithm = dpglm::ParseAlgorithm(*o.alg);
  if (o.eps) cfg.jdp.eps = cfg.shuffle.eps = *o.eps;
  if (o.delta) cfg.jdp.delta = cfg.shuffle.delta = *o.delta;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.d) cfg.recipe.d = *o.d;
  if (o.k) cfg.recipe.K = *o.k;
  if (o.link) cfg.recipe.link = dpglm::ParseLink(*o.link);
  if (o.s) cfg.recipe.S = *o.s;
  if (o.channel) cfg.channel = dpglm::ParseChannelMode(*o.channel);
  if (o.out) cfg.out_dir = *o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.name) cfg.name = *o.name;
  if (o.seed || o.seeds) {
    const std::uint64_t first = o.seed.value_or(cfg.seeds.front());
    const std::int64_t n = o.seeds.value_or(1);
    if (n < 1) throw std::invalid_argument("--seeds must be >= 1");
    cfg.seeds.clear();
    for (std::int64_t i = 0; i < n; ++i) {
      cfg.seeds.push_back(first + static_cast<std::uint64_t>(i));
    }
  }
  cfg.Validate();
}

int CmdRun(const RunOptions& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = dpglm::LoadExperimentConfig(o.config);
  ApplyOverrides(o, cfg);
  const dpglm::ExperimentResult r = dpglm::RunExperiment(cfg);
  const nlohmann::json& s = r.summary;
  std::cout << s["name"].get<std::string>() << " ["
            << s["algorithm"].get<std::string>() << "] "
            << s["instance_label"].get<std::string>() << " kappa="
            << s["kappa"].get<double>() << "\n";
  if (!s["mean_regret"].is_null()) {
    std::cout << "mean regret " << s["mean_regret"].get<double>() << " +- "
              << s["std_regret"].get<double>() << " over " << s["runs"]
              << " runs\n";
  }
  std::cout << "invariant violations " << s["invariant_violations"]
            << ", failures " << s["failures"].size() << "\n";
  for (const auto& f : s["failures"]) {
    std::cout << "  seed " << f["seed"] << ": "
              << f["error"].get<std::string>() << "\n";
  }
  for (const auto& p : s["per_seed"]) {
    for (const auto& v : p["violations"]) {
      std::cout << "  seed " << p["seed"] << ": " << v.get<std::string>()
                << "\n";
    }
  }
  if (cfg.out_dir.empty()) std::cout << s.dump(2) << "\n";
  std::cout << (s["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  return s["pass"].get<bool>() ? 0 : 1;
}

int CmdCompare(const std::vector<std::string>& files, const std::string& out) {
  std::vector<nlohmann::json> summaries;
  for (const std::string& f : files) {
    summaries.push_back(nlohmann::json::parse(dpglm::ReadFile(f)));
  }
  const dpglm::CompareResult r = dpglm::CompareReport(summaries);
  std::cout << r.table << r.flags.dump(2) << "\n";
  if (!out.empty()) dpglm::WriteFile(out, r.table);
  return 0;
}

int CmdAudit(const std::vector<std::string>& sidecars, bool as_json) {
  bool ok = true;
  for (const std::string& f : sidecars) {
    const dpglm::RegretTranscript tr =
        dpglm::SidecarFromJson(nlohmann::json::parse(dpglm::ReadFile(f)));
    const dpglm::AuditReport rep = dpglm::PrivacyLedgerCheck(tr);
    if (as_json) {
      std::cout << rep.ToJson().dump(2) << "\n";
    } else {
      std::cout << "== " << f << " (" << tr.algorithm << ")\n" << rep.ToText();
    }
    ok = ok && rep.consistent();
  }
  return ok ? 0 : 1;
}

int CmdReplay(const std::string& summary_path,
              const std::vector<std::string>& csvs) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::optional<nlohmann::json> stored;
  if (!summary_path.empty()) {
    stored = nlohmann::json::parse(dpglm::ReadFile(summary_path));
    for (const auto& p : (*stored)["per_seed"]) {
      if (!p.contains("csv")) {
        throw std::invalid_argument("summary lists no transcript files");
      }
      pairs.push_back({p["csv"].get<std::string>(),
                       p["sidecar"].get<std::string>()});
    }
  }
  for (const std::string& csv : csvs) {
    std::string sidecar = csv;
    if (sidecar.size() > 4 && sidecar.substr(sidecar.size() - 4) == ".csv") {
      sidecar.resize(sidecar.size() - 4);
    }
    pairs.push_back({csv, sidecar + ".json"});
  }
  if (pairs.empty()) throw std::invalid_argument("nothing to replay");
  const nlohmann::json s = dpglm::ReplayTranscripts(pairs);
  std::cout << s.dump(2) << "\n";
  bool ok = s["pass"].get<bool>();
  if (stored.has_value() && !(*stored)["mean_regret"].is_null()) {
    const double a = (*stored)["mean_regret"].get<double>();
    const double b = s["mean_regret"].get<double>();
    const bool same = std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
    std::cout << "stored mean regret " << a << ", recomputed " << b
              << (same ? " (match)" : " (MISMATCH)") << "\n";
    ok = ok && same;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private generalized linear bandits: experiments and audits"};
  app.require_subcommand(1);

  RunOptions ro;
  CLI::App* run = app.add_subcommand("run", "run a TOML experiment config");
  run->add_option("config", ro.config, "TOML config (defaults if omitted)");
  run->add_option("--alg", ro.alg, "jdp | shuffle | glm_ucb | rs_nonprivate");
  run->add_option("--eps", ro.eps, "privacy epsilon");
  run->add_option("--delta", ro.delta, "privacy delta");
  run->add_option("--T", ro.horizon, "horizon");
  run->add_option("--d", ro.d, "dimension");
  run->add_option("--K", ro.k, "arms per round");
  run->add_option("--seed", ro.seed, "first run seed");
  run->add_option("--seeds", ro.seeds, "number of consecutive run seeds");
  run->add_option("--link", ro.link, "logistic | probit | linear");
  run->add_option("--S", ro.s, "norm of theta*");
  run->add_option("--channel", ro.channel, "full | idealized | noise-off");
  run->add_option("--out", ro.out, "output directory");
  run->add_option("--workers", ro.workers, "worker threads");
  run->add_option("--name", ro.name, "run name (output file stem)");

  std::vector<std::string> compare_files;
  std::string compare_out;
  CLI::App* compare =
      app.add_subcommand("compare", "tabulate summaries over instances");
  compare->add_option("summaries", compare_files, "summary JSON files")
      ->required();
  compare->add_option("--out", compare_out, "also write the table here");

  std::vector<std::string> audit_files;
  bool audit_json = false;
  CLI::App* audit = app.add_subcommand("audit", "re-derive ledger arithmetic");
  audit->add_option("sidecars", audit_files, "transcript sidecar JSON files")
      ->required();
  audit->add_flag("--json", audit_json, "print JSON reports");

  std::string replay_summary;
  std::vector<std::string> replay_csvs;
  CLI::App* replay =
      app.add_subcommand("replay", "recompute a summary from transcripts");
  replay->add_option("--summary", replay_summary, "summary JSON to verify");
  replay->add_option("csvs", replay_csvs,
                     "transcript CSVs (sidecar: same stem, .json)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return CmdRun(ro);
    if (*compare) return CmdCompare(compare_files, compare_out);
    if (*audit) return CmdAudit(audit_files, audit_json);
    if (*replay) return CmdReplay(replay_summary, replay_csvs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
