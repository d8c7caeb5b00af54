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

// Acceptance run: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Each criterion also has a wall-clock
// limit that counts toward its verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dpglm/algo_jdp.h"
#include "dpglm/baselines.h"
#include "dpglm/experiment.h"
#include "dpglm/g_optimal_design.h"
#include "dpglm/glm.h"
#include "dpglm/ledger_audit.h"
#include "dpglm/private_optimizer.h"
#include "dpglm/random.h"
#include "dpglm/shuffle_sum.h"
#include "dpglm/tree_mechanism.h"

namespace dpglm {
namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

ExperimentConfig Cell(const std::string& file) {
  ExperimentConfig cfg =
      LoadExperimentConfig(std::string(DPGLM_SOURCE_DIR) + "/configs/" + file);
  cfg.out_dir.clear();
  return cfg;
}

// 1. G-optimal designs meet the relaxed 2d bound.
Verdict GDesignBound() {
  Verdict v;
  Rng rng(101);
  const int dims[] = {2, 3, 5, 10};
  const int ks[] = {5, 20, 100};
  double worst = -1e300;
  for (int i = 0; i < 200; ++i) {
    const int d = dims[i % 4];
    const int k = ks[(i / 4) % 3];
    ArmSet arms;
    for (int j = 0; j < k; ++j) arms.push_back(SampleUnitBall(d, rng));
    const DesignDistribution dist = GOptimal(arms);
    worst = std::max(worst, dist.g_value - 2.0 * d);
    if (dist.g_value > 2.0 * d + 1e-6) v.pass = false;
  }
  v.detail = "200 instances, max(g - 2d) = " + Fmt("%.4g", worst);
  return v;
}

// 2. Shuffled sums: unbiased at the default blanket noise, and the
// quantization bound without it.
Verdict ShuffleSum() {
  Verdict v;
  const int n = 50, d = 3, trials = 10000;
  Rng rng(202);
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(d);
  for (int u = 0; u < n; ++u) {
    inputs.push_back(Eigen::VectorXd::Random(d));
    truth += inputs.back();
  }
  const ProtocolParams p = DeriveProtocolParams(n, d, 1.0, 0.01);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd err = ShuffledVectorSum(inputs, p, rng) - truth;
    sum += err;
    sq += err.cwiseProduct(err);
  }
  double worst_z = 0.0;
  for (int k = 0; k < d; ++k) {
    const double mean = sum(k) / trials;
    const double var = sq(k) / trials - mean * mean;
    const double z = std::abs(mean) / std::sqrt(var / trials);
    worst_z = std::max(worst_z, z);
    if (z > 3.0) v.pass = false;
  }

  ProtocolParams q = p;
  q.b = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<Eigen::VectorXd> in;
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(d);
    for (int u = 0; u < n; ++u) {
      in.push_back(Eigen::VectorXd::Random(d));
      exact += in.back();
    }
    const double err = (ShuffledVectorSum(in, q, rng) - exact).cwiseAbs().maxCoeff();
    const double bound = n * 2.0 * q.delta_cap / static_cast<double>(q.g);
    worst_ratio = std::max(worst_ratio, err / bound);
    if (err > bound) v.pass = false;
  }
  v.detail = "b = " + std::to_string(p.b) + ", max |mean error| / SE = " +
             Fmt("%.3f", worst_z) + "; b = 0: max |error| / (2 n cap / g) = " +
             Fmt("%.3f", worst_ratio);
  return v;
}

// 3. Tree structure, exhaustive at T = 64.
Verdict TreeStructure() {
  Verdict v;
  const std::int64_t horizon = 64;
  const int m = TreeLevels(horizon);
  std::size_t max_nodes = 0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    max_nodes = std::max(max_nodes, Decomposition(t, horizon).size());
  }
  if (static_cast<int>(max_nodes) > m) v.pass = false;

  // Integer-valued increments: every partial sum is exact in double
  // precision, so bit equality is meaningful.
  Rng rng(303);
  std::uniform_int_distribution<int> coef(-50, 50);
  auto random_sym = [&] {
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = coef(rng);
    }
    return a;
  };
  std::vector<Eigen::MatrixXd> stream;
  for (std::int64_t t = 0; t < horizon; ++t) stream.push_back(random_sym());
  std::size_t max_touched = 0;
  bool exact = true;
  for (std::int64_t leaf = 1; leaf <= horizon; ++leaf) {
    NoisyPrefixTree a(horizon, 3, 0.0, 1), b(horizon, 3, 0.0, 1);
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(3, 3);
    for (std::int64_t t = 1; t <= horizon; ++t) {
      const Eigen::MatrixXd& x = stream[static_cast<std::size_t>(t - 1)];
      a.Insert(x);
      b.Insert(t == leaf ? Eigen::MatrixXd(x + random_sym() +
                                           Eigen::MatrixXd::Identity(3, 3))
                         : x);
      running += x;
      if (leaf == 1 && a.PrefixSum(t) != running) exact = false;
    }
    std::size_t touched = 0;
    for (int level = 0; level < m; ++level) {
      for (std::int64_t idx = 0; idx < (horizon >> level); ++idx) {
        if (a.CleanSum(level, idx) != b.CleanSum(level, idx)) ++touched;
      }
    }
    max_touched = std::max(max_touched, touched);
  }
  if (static_cast<int>(max_touched) > m || !exact) v.pass = false;
  v.detail = "m = " + std::to_string(m) + ", max prefix nodes " +
             std::to_string(max_nodes) + ", max nodes touched by one leaf " +
             std::to_string(max_touched) + ", exact sums " +
             (exact ? "bit-identical" : "DIFFER");
  return v;
}

// 4. Noise-off P_GD against the exact MLE; gradient against finite
// differences.
Verdict OptimizerEquivalence() {
  Verdict v;
  Rng rng(404);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_gap = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int d = 1 + inst % 5;
    const int n = 200;
    const Eigen::VectorXd theta = SampleSphere(d, 2.0, rng);
    std::vector<Observation> data;
    for (int i = 0; i < n; ++i) {
      Observation o;
      o.x = SampleUnitBall(d, rng);
      o.reward = unif(rng) < Mu(LinkKind::kLogistic, o.x.dot(theta)) ? 1.0 : 0.0;
      data.push_back(o);
    }
    const double ridge = 0.05;
    const Eigen::VectorXd mle = MleExact(LinkKind::kLogistic, data, ridge * n,
                                         ConvexFeasibleSet::Unconstrained(d));
    const auto ball = ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(d), 20.0);
    if (!ball.Contains(mle)) v.pass = false;
    PgdConfig cfg;
    cfg.iterations = 10000;
    cfg.step = 2.0;
    cfg.ridge_per_point = ridge;
    const PgdResult r = PgdRun(LinkKind::kLogistic, data, ball, cfg, rng);
    const double gap =
        std::abs(RegularizedLoss(LinkKind::kLogistic, data, ridge * n, r.theta) -
                 RegularizedLoss(LinkKind::kLogistic, data, ridge * n, mle));
    worst_gap = std::max(worst_gap, gap / n);
    if (gap > 1e-6 * n) v.pass = false;
  }

  double worst_rel = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + trial % 5;
    const LinkKind link = trial % 2 ? LinkKind::kProbit : LinkKind::kLogistic;
    const Eigen::VectorXd theta = SampleUnitBall(d, rng) * 3.0;
    const Eigen::VectorXd x = SampleUnitBall(d, rng);
    const double r = unif(rng);
    const Eigen::VectorXd g = LossGradient(link, theta, x, r);
    Eigen::VectorXd fd(d);
    const double h = 1e-6;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      fd(i) = (PointwiseLoss(link, tp, x, r) - PointwiseLoss(link, tm, x, r)) /
              (2 * h);
    }
    const double rel = (fd - g).norm() / std::max(1.0, g.norm());
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-5) v.pass = false;
  }
  v.detail = "20 instances, max loss gap / n = " + Fmt("%.3g", worst_gap) +
             "; 1000 gradients, max relative error " + Fmt("%.3g", worst_rel);
  return v;
}

// 5. Switch and exploration counts stay below their bounds.
Verdict SwitchingBounds() {
  Verdict v;
  // Ten runs in the tuned exploitation regime, ten with exploration on.
  std::vector<std::pair<ExperimentConfig, std::string>> setups;
  setups.push_back({Cell("table2_k56.toml"), "tuned"});
  setups.push_back({Cell("table2_k18.toml"), "exploring"});
  setups[1].first.jdp.gamma_lambda_min_frac = 1.2;
  int runs = 0, violations = 0;
  double max_switch_frac = 0.0, max_explore_frac = 0.0;
  std::int64_t max_switches = 0, max_explores = 0;
  for (auto& [cfg, tag] : setups) {
    cfg.algorithm = Algorithm::kJdp;
    ApplyChannelMode(cfg);
    const Instance inst = BuildInstance(cfg);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Environment env(inst, seed, cfg.horizon);
      const RegretTranscript tr = RunJdp(env, cfg.jdp, seed);
      const JdpParams p =
          DeriveJdpParams(cfg.jdp, inst.model, inst.params, cfg.horizon);
      const double d = p.d;
      const double switch_bound =
          d * std::log2(2.0 + 2.0 * cfg.horizon / (p.lambda_min * d));
      const double explore_bound = 8.0 * d * p.R * p.R * p.kappa * p.gamma *
                                   p.gamma * std::log(cfg.horizon);
      ++runs;
      const auto sw = tr.counters.switches;
      const auto ex = tr.counters.explore_rounds;
      if (sw > switch_bound || ex > explore_bound) ++violations;
      max_switches = std::max(max_switches, sw);
      max_explores = std::max(max_explores, ex);
      max_switch_frac = std::max(max_switch_frac, sw / switch_bound);
      max_explore_frac = std::max(max_explore_frac, ex / explore_bound);
    }
  }
  v.pass = violations == 0 && runs == 20;
  v.detail = std::to_string(runs) + " runs, " + std::to_string(violations) +
             " violations; max switches " + std::to_string(max_switches) +
             " (" + Fmt("%.2f", max_switch_frac) + " of bound), max |T_o| " +
             std::to_string(max_explores) + " (" +
             Fmt("%.3f", max_explore_frac) + " of bound)";
  return v;
}

// 6. The qualitative regret pattern on the probit kappa grid.
Verdict Table2() {
  Verdict v;
  const std::vector<std::string> files = {"table2_k18.toml", "table2_k56.toml",
                                          "table2_k222.toml"};
  struct Row {
    std::string label;
    Algorithm alg;
    double eps;
  };
  const std::vector<Row> rows = {{"glm_ucb", Algorithm::kGlmUcb, 0},
                                 {"rs_nonprivate", Algorithm::kRsNonprivate, 8},
                                 {"jdp", Algorithm::kJdp, 4},
                                 {"jdp", Algorithm::kJdp, 6},
                                 {"jdp", Algorithm::kJdp, 8}};
  std::vector<nlohmann::json> summaries;
  // mean[row index][cell], sd[row index][cell]
  std::vector<std::vector<double>> mean(rows.size()), sd(rows.size());
  int violations = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const std::string& f : files) {
      ExperimentConfig cfg = Cell(f);
      cfg.algorithm = rows[r].alg;
      cfg.jdp.eps = rows[r].eps > 0 ? rows[r].eps : cfg.jdp.eps;
      cfg.label = rows[r].label;
      const ExperimentResult res = RunExperiment(cfg);
      violations += res.summary["invariant_violations"].get<int>();
      violations += static_cast<int>(res.summary["failures"].size());
      mean[r].push_back(res.summary["mean_regret"].get<double>());
      sd[r].push_back(res.summary["std_regret"].get<double>());
      summaries.push_back(res.summary);
    }
  }
  const CompareResult table = CompareReport(summaries);
  std::printf("%s", table.table.c_str());

  const auto& ucb = mean[0];
  const auto& rs = mean[1];
  const bool a = ucb[2] >= 1.3 * ucb[0];
  const auto& e8 = mean[4];
  const double lo = std::min({e8[0], e8[1], e8[2]});
  const double hi = std::max({e8[0], e8[1], e8[2]});
  const bool b = (hi - lo) / lo <= 0.25;
  bool c = true;
  for (std::size_t cell = 0; cell < 3; ++cell) {
    for (std::size_t r = 3; r <= 4; ++r) {
      const double pooled =
          std::sqrt((sd[r - 1][cell] * sd[r - 1][cell] + sd[r][cell] * sd[r][cell]) / 2);
      c = c && mean[r][cell] <= mean[r - 1][cell] + pooled;
    }
  }
  bool dd = true;
  double worst_ratio = 0.0;
  for (std::size_t cell = 0; cell < 3; ++cell) {
    const double ratio = std::max(e8[cell] / rs[cell], rs[cell] / e8[cell]);
    worst_ratio = std::max(worst_ratio, ratio);
    dd = dd && ratio <= 3.0;
  }
  v.pass = a && b && c && dd && violations == 0;
  v.detail = std::string("(a) glm_ucb k222/k18 = ") + Fmt("%.2f", ucb[2] / ucb[0]) +
             (a ? " ok" : " FAIL") + "; (b) eps=8 spread " +
             Fmt("%.3f", (hi - lo) / lo) + (b ? " ok" : " FAIL") +
             "; (c) eps trend " + (c ? "ok" : "FAIL") +
             "; (d) max eps=8 vs rs ratio " + Fmt("%.2f", worst_ratio) +
             (dd ? " ok" : " FAIL") + "; violations " +
             std::to_string(violations);
  return v;
}

// 7. Noise-off Algorithm 2 and the rarely-switching baseline agree byte
// for byte.
Verdict ReductionIdentity() {
  Verdict v;
  std::vector<ExperimentConfig> cells = {Cell("table2_k18.toml"),
                                         Cell("table2_k56.toml"),
                                         Cell("table2_k222.toml"),
                                         Cell("table2_k18.toml"),
                                         Cell("table2_k56.toml")};
  // Two of the cells explore, and one uses a logistic link.
  cells[3].jdp.gamma_lambda_min_frac = 1.2;
  cells[4].jdp.gamma_lambda_min_frac = 1.2;
  cells[4].recipe.link = LinkKind::kLogistic;
  cells[4].target_kappa.reset();
  int identical = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    ExperimentConfig& cfg = cells[i];
    cfg.channel = ChannelMode::kNoiseOff;
    ApplyChannelMode(cfg);
    const Instance inst = BuildInstance(cfg);
    const std::uint64_t seed = 11 + i;
    Environment e1(inst, seed, cfg.horizon), e2(inst, seed, cfg.horizon);
    const RegretTranscript a = RunJdp(e1, cfg.jdp, seed);
    const RegretTranscript b = RunRsNonprivate(e2, cfg.jdp, seed);
    nlohmann::json ja = SidecarToJson(a), jb = SidecarToJson(b);
    ja.erase("algorithm");
    jb.erase("algorithm");
    if (RoundsToCsv(a) == RoundsToCsv(b) && ja.dump() == jb.dump()) ++identical;
  }
  v.pass = identical == 5;
  v.detail = std::to_string(identical) +
             "/5 instances with identical round CSV and sidecar (name aside)";
  return v;
}

// 8. Full-protocol ledgers spend exactly the configured budget.
Verdict LedgerArithmetic(double* audit_seconds) {
  Verdict v;
  std::vector<RegretTranscript> runs;
  {
    ExperimentConfig cfg = Cell("table2_k18.toml");
    cfg.jdp.eps = 6.0;
    cfg.jdp.gamma_lambda_min_frac = 1.2;
    cfg.horizon = 1000;
    cfg.channel = ChannelMode::kFull;
    ApplyChannelMode(cfg);
    runs.push_back(RunOne(cfg, BuildInstance(cfg), 1));
  }
  {
    ExperimentConfig cfg = Cell("shuffle_logistic.toml");
    cfg.channel = ChannelMode::kFull;
    cfg.shuffle.lambda.reset();
    cfg.horizon = 2000;
    ApplyChannelMode(cfg);
    runs.push_back(RunOne(cfg, BuildInstance(cfg), 1));
  }
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  for (const RegretTranscript& tr : runs) {
    const AuditReport rep = PrivacyLedgerCheck(tr);
    const bool exact = rep.ExactlyOnBudget() && rep.eps_total == tr.eps &&
                       rep.delta_total == tr.delta;
    v.pass = v.pass && exact;
    if (!detail.empty()) detail += "; ";
    detail += tr.algorithm + " eps " + Fmt("%g", rep.eps_total) + "/" +
              Fmt("%g", tr.eps) + " delta " + Fmt("%g", rep.delta_total) + "/" +
              Fmt("%g", tr.delta) + (exact ? " exact" : " NOT EXACT");
    if (!exact) detail += " [" + rep.ToText() + "]";
  }
  *audit_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  v.detail = detail;
  return v;
}

int Main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Verdict(double*)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "G-optimal design bound", 30, [](double*) { return GDesignBound(); }},
      {2, "shuffle summation correctness", 60, [](double*) { return ShuffleSum(); }},
      {3, "tree mechanism structure", 5, [](double*) { return TreeStructure(); }},
      {4, "optimizer equivalence", 60,
       [](double*) { return OptimizerEquivalence(); }},
      {5, "switching bounds", 600, [](double*) { return SwitchingBounds(); }},
      {6, "kappa grid qualitative pattern", 2700, [](double*) { return Table2(); }},
      {7, "reduction identity", 300, [](double*) { return ReductionIdentity(); }},
      {8, "ledger arithmetic", 1, [](double* t) { return LedgerArithmetic(t); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    double timed = -1.0;
    Verdict v;
    try {
      v = c.run(&timed);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double total = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    // Criterion 8 limits the audit itself, not the runs that feed it.
    const double seconds = timed >= 0 ? timed : total;
    const bool in_time = seconds <= c.limit_seconds;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("criterion %d %s: %s | %s | %.2f s (limit %.0f s)%s\n", c.id,
                c.name, pass ? "PASS" : "FAIL", v.detail.c_str(), seconds,
                c.limit_seconds, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dpglm

int main() { return dpglm::Main(); }
