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

#include "dpglm/ledger_audit.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dpglm/shuffle_sum.h"
#include "dpglm/tree_mechanism.h"

namespace dpglm {
namespace {

// Relative slack for re-evaluated floating-point formulas. Shares are
// compared exactly.
constexpr double kRelTol = 1e-12;

Share Reduce(Share s) {
  if (s.den < 0) {
    s.num = -s.num;
    s.den = -s.den;
  }
  const std::int64_t g = std::gcd(s.num, s.den);
  if (g > 1) {
    s.num /= g;
    s.den /= g;
  }
  return s;
}

Share Add(Share a, Share b) {
  return Reduce({a.num * b.den + b.num * a.den, a.den * b.den});
}

// a < b for non-negative fractions.
bool Less(Share a, Share b) { return a.num * b.den < b.num * a.den; }

bool Close(double a, double b) {
  return std::abs(a - b) <= kRelTol * std::max(std::abs(a), std::abs(b));
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

class Auditor {
 public:
  explicit Auditor(const RegretTranscript& tr) : tr_(tr) {
    report_.eps = tr.eps;
    report_.delta = tr.delta;
  }

  AuditReport Run() {
    std::map<std::int64_t, std::pair<Share, Share>> groups;
    for (const LedgerEntry& e : tr_.ledger) {
      if (e.eps_share.den <= 0 || e.delta_share.den <= 0 ||
          e.eps_share.num < 0 || e.delta_share.num < 0) {
        Problem(e, "malformed share");
        continue;
      }
      CheckCharge(e);
      CheckMechanism(e);
      if (!e.is_private) report_.non_private.push_back(e.mechanism);
      auto& g = groups[e.group];
      g.first = Add(g.first, e.eps_share);
      g.second = Add(g.second, e.delta_share);
    }
    for (const auto& [group, shares] : groups) {
      if (Less(report_.eps_share, shares.first)) report_.eps_share = shares.first;
      if (Less(report_.delta_share, shares.second)) {
        report_.delta_share = shares.second;
      }
    }
    report_.eps_total = tr_.eps * static_cast<double>(report_.eps_share.num) /
                        static_cast<double>(report_.eps_share.den);
    report_.delta_total = tr_.delta *
                          static_cast<double>(report_.delta_share.num) /
                          static_cast<double>(report_.delta_share.den);
    const Share one{1, 1};
    if (Less(one, report_.eps_share) || Less(one, report_.delta_share)) {
      report_.problems.push_back("group shares exceed the configured budget");
    }
    return report_;
  }

 private:
  void Problem(const LedgerEntry& e, const std::string& what) {
    report_.problems.push_back(e.mechanism + " (group " +
                               std::to_string(e.group) + "): " + what);
  }

  void CheckCharge(const LedgerEntry& e) {
    const double eps = tr_.eps * static_cast<double>(e.eps_share.num) /
                       static_cast<double>(e.eps_share.den);
    const double delta = tr_.delta * static_cast<double>(e.delta_share.num) /
                         static_cast<double>(e.delta_share.den);
    if (!Close(eps, e.eps)) {
      Problem(e, "eps " + Fmt(e.eps) + " != share x budget " + Fmt(eps));
    }
    if (!Close(delta, e.delta)) {
      Problem(e, "delta " + Fmt(e.delta) + " != share x budget " + Fmt(delta));
    }
  }

  void CheckMechanism(const LedgerEntry& e) {
    const nlohmann::json& d = e.details;
    const std::string kind = d.value("kind", "");
    try {
      if (kind == "tree") {
        CheckTree(e);
      } else if (kind == "optimizer_calls") {
        CheckOptimizerCalls(e);
      } else if (kind == "shuffle_sum") {
        CheckShuffleSum(e);
      } else if (kind == "pgd") {
        CheckPgd(e);
      } else if (kind == "claimed") {
        // Charged by construction; nothing to re-derive.
      } else if (e.is_private) {
        Problem(e, "private entry of unknown kind '" + kind + "'");
      }
    } catch (const std::exception& ex) {
      Problem(e, std::string("cannot re-derive: ") + ex.what());
    }
  }

  // The tree noise formula spends the configured eps across both trees:
  // inverting sigma must give back the configured eps.
  void CheckTree(const LedgerEntry& e) {
    const nlohmann::json& d = e.details;
    const double sigma = d.at("sigma").get<double>();
    const double sens = d.at("sensitivity").get<double>();
    const auto horizon = d.at("horizon").get<std::int64_t>();
    if (d.at("levels").get<int>() != TreeLevels(horizon)) {
      Problem(e, "levels do not match ceil(log2 T) + 1");
    }
    if (sigma == 0.0) {
      if (e.is_private) Problem(e, "noise-free tree marked private");
      return;
    }
    const double m = TreeLevels(horizon);
    const double eps =
        6.0 * std::sqrt(m) * std::log(32.0 / tr_.delta) * sens / sigma;
    if (!Close(eps, tr_.eps)) {
      Problem(e, "sigma inverts to eps " + Fmt(eps) + ", configured " +
                     Fmt(tr_.eps));
    }
  }

  void CheckOptimizerCalls(const LedgerEntry& e) {
    const nlohmann::json& d = e.details;
    const double eps_o = d.at("eps_o").get<double>();
    const double delta_o = d.at("delta_o").get<double>();
    const double cutoff = d.at("cutoff").get<double>();
    const auto calls = d.at("calls").get<std::int64_t>();
    const double eps =
        eps_o * 6.0 * std::sqrt(2.0 * cutoff * std::log(4.0 / tr_.delta));
    if (!Close(eps, tr_.eps)) {
      Problem(e, "eps_o composes to " + Fmt(eps) + ", configured " +
                     Fmt(tr_.eps));
    }
    if (!Close(delta_o * 6.0 * cutoff, tr_.delta)) {
      Problem(e, "delta_o composes to " + Fmt(delta_o * 6.0 * cutoff));
    }
    if (static_cast<double>(calls) > cutoff) {
      Problem(e, std::to_string(calls) + " calls exceed the cutoff " +
                     Fmt(cutoff));
    }
  }

  void CheckShuffleSum(const LedgerEntry& e) {
    const nlohmann::json& d = e.details;
    if (d.at("channel").get<std::string>() == "exact") {
      if (e.is_private) Problem(e, "exact summation marked private");
      return;
    }
    const ProtocolParams p = DeriveProtocolParams(
        d.at("users").get<std::int64_t>(), d.at("d").get<int>(), e.eps,
        e.delta, d.at("c_b").get<double>(), d.at("cap").get<double>());
    if (p.b != d.at("b").get<std::int64_t>() ||
        p.g != d.at("g").get<std::int64_t>()) {
      Problem(e, "protocol parameters do not match (eps, delta) of the entry");
    }
  }

  void CheckPgd(const LedgerEntry& e) {
    const nlohmann::json& d = e.details;
    if (d.at("channel").get<std::string>() == "exact") {
      if (e.is_private) Problem(e, "exact gradients marked private");
      return;
    }
    const double steps = d.at("iterations").get<double>();
    const double step_eps = d.at("step_eps").get<double>();
    const double step_delta = d.at("step_delta").get<double>();
    const double eps =
        step_eps * 2.0 * std::sqrt(2.0 * steps * std::log(1.0 / e.delta));
    if (!Close(eps, e.eps)) {
      Problem(e, "per-step eps composes to " + Fmt(eps));
    }
    if (!Close(step_delta * (steps + 1.0), e.delta)) {
      Problem(e, "per-step delta composes to " +
                     Fmt(step_delta * (steps + 1.0)));
    }
  }

  const RegretTranscript& tr_;
  AuditReport report_;
};

std::string ShareText(Share s) {
  return std::to_string(s.num) + "/" + std::to_string(s.den);
}

}  // namespace

bool AuditReport::ExactlyOnBudget() const {
  return consistent() && non_private.empty() && eps_share == Share{1, 1} &&
         delta_share == Share{1, 1};
}

nlohmann::json AuditReport::ToJson() const {
  return {{"eps", eps},
          {"delta", delta},
          {"eps_share", {eps_share.num, eps_share.den}},
          {"delta_share", {delta_share.num, delta_share.den}},
          {"eps_total", eps_total},
          {"delta_total", delta_total},
          {"non_private", non_private},
          {"problems", problems},
          {"consistent", consistent()},
          {"exactly_on_budget", ExactlyOnBudget()}};
}

std::string AuditReport::ToText() const {
  std::ostringstream out;
  out << "budget      eps=" << Fmt(eps) << " delta=" << Fmt(delta) << "\n";
  out << "spent       eps=" << Fmt(eps_total) << " (" << ShareText(eps_share)
      << ") delta=" << Fmt(delta_total) << " (" << ShareText(delta_share)
      << ")\n";
  for (const std::string& m : non_private) {
    out << "NON-PRIVATE " << m << "\n";
  }
  for (const std::string& p : problems) out << "PROBLEM     " << p << "\n";
  out << (consistent() ? "ledger arithmetic consistent"
                       : "ledger arithmetic INCONSISTENT")
      << "\n";
  return out.str();
}

AuditReport PrivacyLedgerCheck(const RegretTranscript& transcript) {
  return Auditor(transcript).Run();
}

}  // namespace dpglm
