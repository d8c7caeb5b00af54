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

#include "dpglm/transcript.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace dpglm {
namespace {

constexpr const char* kCsvHeader =
    "round,context_hash,arm_index,reward,instant_regret,cumulative_regret,"
    "explore,switch,policy_epoch";

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("transcript CSV line " + std::to_string(line) +
                             ": bad number '" + s + "'");
  }
  return v;
}

long long ParseInt(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("transcript CSV line " + std::to_string(line) +
                             ": bad integer '" + s + "'");
  }
  return v;
}

nlohmann::json ShareJson(const Share& s) { return {s.num, s.den}; }

Share JsonShare(const nlohmann::json& j) {
  return Share{j.at(0).get<std::int64_t>(), j.at(1).get<std::int64_t>()};
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> JsonOptional(const nlohmann::json& j,
                                   const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t ContextHash(const ArmSet& arms) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Eigen::VectorXd& x : arms) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      unsigned char bytes[sizeof(double)];
      const double v = x(i);
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

void RegretTranscript::Append(RoundRecord record) {
  record.round = static_cast<std::int64_t>(rounds.size()) + 1;
  record.cumulative_regret = CumulativeRegret() + record.instant_regret;
  rounds.push_back(record);
}

double RegretTranscript::CumulativeRegret() const {
  return rounds.empty() ? 0.0 : rounds.back().cumulative_regret;
}

std::vector<std::string> CheckInvariants(const RegretTranscript& tr) {
  std::vector<std::string> out;
  double running = 0.0;
  std::int64_t explores = 0;
  std::int64_t switches = 0;
  for (std::size_t i = 0; i < tr.rounds.size(); ++i) {
    const RoundRecord& r = tr.rounds[i];
    if (r.round != static_cast<std::int64_t>(i) + 1) {
      out.push_back("round " + std::to_string(i + 1) + " is numbered " +
                    std::to_string(r.round));
    }
    if (!(r.instant_regret >= 0)) {
      out.push_back("negative instantaneous regret at round " +
                    std::to_string(r.round));
    }
    running += r.instant_regret;
    if (running != r.cumulative_regret) {
      out.push_back("cumulative regret is not the running sum at round " +
                    std::to_string(r.round));
      running = r.cumulative_regret;
    }
    if (r.explore) ++explores;
    if (r.policy_switch) ++switches;
  }
  if (tr.horizon > 0 &&
      static_cast<std::int64_t>(tr.rounds.size()) != tr.horizon) {
    out.push_back("transcript has " + std::to_string(tr.rounds.size()) +
                  " rounds, horizon is " + std::to_string(tr.horizon));
  }
  const Counters& c = tr.counters;
  if (explores != c.explore_rounds) {
    out.push_back("explore flags disagree with the explore counter");
  }
  if (switches != c.switches) {
    out.push_back("switch flags disagree with the switch counter");
  }
  const RunBounds& b = tr.bounds;
  if (b.switch_bound && static_cast<double>(c.switches) > *b.switch_bound) {
    out.push_back("switch count " + std::to_string(c.switches) +
                  " exceeds bound " + FormatDouble(*b.switch_bound));
  }
  if (b.explore_bound &&
      static_cast<double>(c.explore_rounds) > *b.explore_bound) {
    out.push_back("explore count " + std::to_string(c.explore_rounds) +
                  " exceeds bound " + FormatDouble(*b.explore_bound));
  }
  if (b.count1_cutoff && static_cast<double>(c.count1) > *b.count1_cutoff) {
    out.push_back("count1 exceeds its cutoff");
  }
  if (b.count2_cutoff && static_cast<double>(c.count2) > *b.count2_cutoff) {
    out.push_back("count2 exceeds its cutoff");
  }
  return out;
}

std::string RoundsToCsv(const RegretTranscript& tr) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const RoundRecord& r : tr.rounds) {
    out += std::to_string(r.round);
    out += ',';
    out += std::to_string(r.context_hash);
    out += ',';
    out += std::to_string(r.arm_index);
    out += ',';
    out += FormatDouble(r.reward);
    out += ',';
    out += FormatDouble(r.instant_regret);
    out += ',';
    out += FormatDouble(r.cumulative_regret);
    out += ',';
    out += r.explore ? '1' : '0';
    out += ',';
    out += r.policy_switch ? '1' : '0';
    out += ',';
    out += std::to_string(r.policy_epoch);
    out += '\n';
  }
  return out;
}

std::vector<RoundRecord> RoundsFromCsv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("transcript CSV line 1: unexpected header");
  }
  std::vector<RoundRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 9) {
      throw std::runtime_error("transcript CSV line " + std::to_string(lineno) +
                               ": expected 9 fields, got " +
                               std::to_string(f.size()));
    }
    RoundRecord r;
    r.round = ParseInt(f[0], lineno);
    char* end = nullptr;
    r.context_hash = std::strtoull(f[1].c_str(), &end, 10);
    if (f[1].empty() || end != f[1].c_str() + f[1].size()) {
      throw std::runtime_error("transcript CSV line " + std::to_string(lineno) +
                               ": bad context hash");
    }
    r.arm_index = ParseInt(f[2], lineno);
    r.reward = ParseDouble(f[3], lineno);
    r.instant_regret = ParseDouble(f[4], lineno);
    r.cumulative_regret = ParseDouble(f[5], lineno);
    r.explore = ParseInt(f[6], lineno) != 0;
    r.policy_switch = ParseInt(f[7], lineno) != 0;
    r.policy_epoch = ParseInt(f[8], lineno);
    out.push_back(r);
  }
  return out;
}

nlohmann::json LedgerEntryToJson(const LedgerEntry& e) {
  return {{"mechanism", e.mechanism},
          {"group", e.group},
          {"eps_share", ShareJson(e.eps_share)},
          {"delta_share", ShareJson(e.delta_share)},
          {"eps", e.eps},
          {"delta", e.delta},
          {"first_round", e.first_round},
          {"last_round", e.last_round},
          {"private", e.is_private},
          {"details", e.details}};
}

LedgerEntry LedgerEntryFromJson(const nlohmann::json& j) {
  LedgerEntry e;
  e.mechanism = j.at("mechanism").get<std::string>();
  e.group = j.at("group").get<std::int64_t>();
  e.eps_share = JsonShare(j.at("eps_share"));
  e.delta_share = JsonShare(j.at("delta_share"));
  e.eps = j.at("eps").get<double>();
  e.delta = j.at("delta").get<double>();
  e.first_round = j.at("first_round").get<std::int64_t>();
  e.last_round = j.at("last_round").get<std::int64_t>();
  e.is_private = j.at("private").get<bool>();
  e.details = j.value("details", nlohmann::json::object());
  return e;
}

nlohmann::json SidecarToJson(const RegretTranscript& tr) {
  const Counters& c = tr.counters;
  nlohmann::json j;
  j["algorithm"] = tr.algorithm;
  j["seed"] = tr.seed;
  j["horizon"] = tr.horizon;
  j["eps"] = tr.eps;
  j["delta"] = tr.delta;
  j["counters"] = {{"count1", c.count1},
                   {"count2", c.count2},
                   {"explore_rounds", c.explore_rounds},
                   {"switches", c.switches},
                   {"psd_repairs", c.psd_repairs},
                   {"clamps", c.clamps},
                   {"elimination_guards", c.elimination_guards},
                   {"sensitivity_warnings", c.sensitivity_warnings},
                   {"clipped_gradients", c.clipped_gradients},
                   {"estimator_failures", c.estimator_failures},
                   {"norm_checks", c.norm_checks},
                   {"norm_check_failures", c.norm_check_failures},
                   {"norm_check_excluded", c.norm_check_excluded}};
  nlohmann::json ledger = nlohmann::json::array();
  for (const LedgerEntry& e : tr.ledger) ledger.push_back(LedgerEntryToJson(e));
  j["ledger"] = std::move(ledger);
  nlohmann::json batches = nlohmann::json::array();
  for (const BatchInfo& b : tr.batches) {
    batches.push_back({{"index", b.index},
                       {"first_round", b.first_round},
                       {"last_round", b.last_round},
                       {"delta_cap", b.delta_cap},
                       {"users", b.users}});
  }
  j["batches"] = std::move(batches);
  j["bounds"] = {{"switch_bound", OptionalJson(tr.bounds.switch_bound)},
                 {"explore_bound", OptionalJson(tr.bounds.explore_bound)},
                 {"count1_cutoff", OptionalJson(tr.bounds.count1_cutoff)},
                 {"count2_cutoff", OptionalJson(tr.bounds.count2_cutoff)}};
  j["settings"] = tr.settings;
  return j;
}

RegretTranscript SidecarFromJson(const nlohmann::json& j) {
  RegretTranscript tr;
  tr.algorithm = j.at("algorithm").get<std::string>();
  tr.seed = j.at("seed").get<std::uint64_t>();
  tr.horizon = j.at("horizon").get<std::int64_t>();
  tr.eps = j.at("eps").get<double>();
  tr.delta = j.at("delta").get<double>();
  const nlohmann::json& c = j.at("counters");
  tr.counters.count1 = c.at("count1").get<std::int64_t>();
  tr.counters.count2 = c.at("count2").get<std::int64_t>();
  tr.counters.explore_rounds = c.at("explore_rounds").get<std::int64_t>();
  tr.counters.switches = c.at("switches").get<std::int64_t>();
  tr.counters.psd_repairs = c.at("psd_repairs").get<std::int64_t>();
  tr.counters.clamps = c.at("clamps").get<std::int64_t>();
  tr.counters.elimination_guards =
      c.at("elimination_guards").get<std::int64_t>();
  tr.counters.sensitivity_warnings =
      c.at("sensitivity_warnings").get<std::int64_t>();
  tr.counters.clipped_gradients = c.at("clipped_gradients").get<std::int64_t>();
  tr.counters.estimator_failures =
      c.at("estimator_failures").get<std::int64_t>();
  tr.counters.norm_checks = c.value("norm_checks", std::int64_t{0});
  tr.counters.norm_check_failures =
      c.value("norm_check_failures", std::int64_t{0});
  tr.counters.norm_check_excluded =
      c.value("norm_check_excluded", std::int64_t{0});
  for (const auto& e : j.at("ledger")) {
    tr.ledger.push_back(LedgerEntryFromJson(e));
  }
  for (const auto& b : j.at("batches")) {
    tr.batches.push_back(BatchInfo{b.at("index").get<int>(),
                                   b.at("first_round").get<std::int64_t>(),
                                   b.at("last_round").get<std::int64_t>(),
                                   b.at("delta_cap").get<double>(),
                                   b.at("users").get<std::int64_t>()});
  }
  const nlohmann::json& b = j.at("bounds");
  tr.bounds.switch_bound = JsonOptional(b, "switch_bound");
  tr.bounds.explore_bound = JsonOptional(b, "explore_bound");
  tr.bounds.count1_cutoff = JsonOptional(b, "count1_cutoff");
  tr.bounds.count2_cutoff = JsonOptional(b, "count2_cutoff");
  tr.settings = j.value("settings", nlohmann::json::object());
  return tr;
}

}  // namespace dpglm
