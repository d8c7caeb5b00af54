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

// Per-round record of a bandit run plus its counters and privacy ledger.
//
// The per-round part serializes to CSV with the fixed columns
//   round,context_hash,arm_index,reward,instant_regret,cumulative_regret,
//   explore,switch,policy_epoch
// and everything else to a JSON sidecar. Floats use 17 significant digits.

#ifndef DPGLM_TRANSCRIPT_H_
#define DPGLM_TRANSCRIPT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpglm/glm.h"

namespace dpglm {

// FNV-1a over the raw bytes of every arm coordinate.
std::uint64_t ContextHash(const ArmSet& arms);

struct RoundRecord {
  std::int64_t round = 0;  // 1-based
  std::uint64_t context_hash = 0;
  std::int64_t arm_index = 0;
  double reward = 0.0;
  double instant_regret = 0.0;
  double cumulative_regret = 0.0;
  bool explore = false;
  bool policy_switch = false;
  std::int64_t policy_epoch = 0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct Counters {
  std::int64_t count1 = 0;  // exploration-estimator refits
  std::int64_t count2 = 0;  // policy-estimator refits
  std::int64_t explore_rounds = 0;
  std::int64_t switches = 0;
  std::int64_t psd_repairs = 0;
  std::int64_t clamps = 0;
  std::int64_t elimination_guards = 0;
  std::int64_t sensitivity_warnings = 0;
  std::int64_t clipped_gradients = 0;
  std::int64_t estimator_failures = 0;
  // Norm-transfer probes: performed, failed, skipped for large noise.
  std::int64_t norm_checks = 0;
  std::int64_t norm_check_failures = 0;
  std::int64_t norm_check_excluded = 0;

  friend bool operator==(const Counters&, const Counters&) = default;
};

// An exact fraction of the configured epsilon or delta.
struct Share {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend bool operator==(const Share&, const Share&) = default;
};

struct LedgerEntry {
  std::string mechanism;
  // Group of users the entry charges. Entries in different groups touch
  // disjoint users and compose in parallel; entries in one group add up.
  std::int64_t group = 0;
  Share eps_share;
  Share delta_share;
  // The charged amounts, i.e. share times the configured budget.
  double eps = 0.0;
  double delta = 0.0;
  std::int64_t first_round = 0;
  std::int64_t last_round = 0;
  // False for noise-off or otherwise non-private channels.
  bool is_private = true;
  // Mechanism parameters the audit re-derives the charge from.
  nlohmann::json details = nlohmann::json::object();
};

struct BatchInfo {
  int index = 0;
  std::int64_t first_round = 0;
  std::int64_t last_round = 0;
  double delta_cap = 0.0;
  std::int64_t users = 0;
};

// Worst-case bounds the run must respect; absent bounds are not checked.
struct RunBounds {
  std::optional<double> switch_bound;
  std::optional<double> explore_bound;
  std::optional<double> count1_cutoff;
  std::optional<double> count2_cutoff;
};

struct RegretTranscript {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;
  double eps = 0.0;
  double delta = 0.0;
  std::vector<RoundRecord> rounds;
  Counters counters;
  std::vector<LedgerEntry> ledger;
  std::vector<BatchInfo> batches;
  RunBounds bounds;
  // Hyperparameters and instance facts used by the run.
  nlohmann::json settings = nlohmann::json::object();

  // Appends a round, filling round and cumulative_regret.
  void Append(RoundRecord record);
  double CumulativeRegret() const;
};

// Empty when all transcript invariants hold; one message per violation
// otherwise.
std::vector<std::string> CheckInvariants(const RegretTranscript& transcript);

std::string RoundsToCsv(const RegretTranscript& transcript);
// Parses the CSV written by RoundsToCsv. Throws std::runtime_error with the
// offending line number on malformed input.
std::vector<RoundRecord> RoundsFromCsv(const std::string& csv);

nlohmann::json SidecarToJson(const RegretTranscript& transcript);
// Restores everything but the rounds.
RegretTranscript SidecarFromJson(const nlohmann::json& j);

nlohmann::json LedgerEntryToJson(const LedgerEntry& e);
LedgerEntry LedgerEntryFromJson(const nlohmann::json& j);

// "%.17g".
std::string FormatDouble(double v);

}  // namespace dpglm

#endif  // DPGLM_TRANSCRIPT_H_
