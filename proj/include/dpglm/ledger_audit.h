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

// Arithmetic audit of a run's privacy ledger.
//
// Every entry's charge is re-derived from the mechanism parameters it
// records (tree noise, optimizer budgets, protocol parameters), and the
// rational shares are summed per user group. Entries in different groups
// compose in parallel, so the spend is the maximum over groups. Nothing
// here certifies privacy; it checks that the split was applied as written.

#ifndef DPGLM_LEDGER_AUDIT_H_
#define DPGLM_LEDGER_AUDIT_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "dpglm/transcript.h"

namespace dpglm {

struct AuditReport {
  // Configured budget.
  double eps = 0.0;
  double delta = 0.0;
  // Largest per-group share sum, as an exact fraction and as a value.
  Share eps_share;
  Share delta_share;
  double eps_total = 0.0;
  double delta_total = 0.0;
  // Mechanisms running without noise.
  std::vector<std::string> non_private;
  // Re-derivation mismatches and overspends.
  std::vector<std::string> problems;

  // No problems and the group shares do not exceed one.
  bool consistent() const { return problems.empty(); }
  // Consistent, fully private and spending exactly the configured budget.
  bool ExactlyOnBudget() const;
  nlohmann::json ToJson() const;
  std::string ToText() const;
};

AuditReport PrivacyLedgerCheck(const RegretTranscript& transcript);

}  // namespace dpglm

#endif  // DPGLM_LEDGER_AUDIT_H_
