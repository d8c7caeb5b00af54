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

#include "dpglm/private_optimizer.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dpglm/random.h"

namespace dpglm {
namespace {

std::vector<Observation> LogisticData(int n, int d, double s, Rng& rng) {
  const Eigen::VectorXd theta = SampleSphere(d, s, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.x = SampleUnitBall(d, rng);
    o.reward = unif(rng) < Mu(LinkKind::kLogistic, o.x.dot(theta)) ? 1.0 : 0.0;
    data.push_back(o);
  }
  return data;
}

// Independent scalar root finder for the d = 1 MLE example.
double Bisect(double lo, double hi, double (*f)(double)) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0) == (f(hi) > 0)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TEST(FeasibleSet, BallProjection) {
  const auto ball = ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(3), 2.0);
  Eigen::VectorXd far(3);
  far << 4, 0, 0;
  EXPECT_LE((ball.Project(far) - far / 2).norm(), 1e-15);
  Eigen::VectorXd inside(3);
  inside << 0.5, -0.5, 1.0;
  EXPECT_EQ(ball.Project(inside), inside);
  EXPECT_EQ(ball.Diameter(), 4.0);
}

TEST(FeasibleSet, EllipsoidDiagonalExample) {
  Eigen::MatrixXd v(2, 2);
  v << 4, 0, 0, 1;
  const auto e = ConvexFeasibleSet::Ellipsoid(Eigen::VectorXd::Zero(2), v, 1.0);
  Eigen::VectorXd theta(2);
  theta << 2, 0;
  const Eigen::VectorXd p = e.Project(theta);
  EXPECT_NEAR(p(0), 0.5, 1e-10);
  EXPECT_NEAR(p(1), 0.0, 1e-10);
  EXPECT_NEAR(e.Diameter(), 2.0 / std::sqrt(1.0), 1e-12);

  // Brute-force grid over the boundary for the closest point.
  const Eigen::VectorXd q(Eigen::Vector2d(1.5, 1.5));
  const Eigen::VectorXd pq = e.Project(q);
  double best = 1e300;
  for (int k = 0; k < 200000; ++k) {
    const double a = 2 * M_PI * k / 200000;
    const Eigen::Vector2d b(0.5 * std::cos(a), std::sin(a));
    best = std::min(best, (b - Eigen::Vector2d(q)).norm());
  }
  EXPECT_NEAR((pq - q).norm(), best, 1e-6);
  EXPECT_TRUE(e.Contains(pq));
  EXPECT_LE((e.Project(pq) - pq).norm(), 1e-12);
}

TEST(FeasibleSet, ProjectionIsIdempotentAndFeasible) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 4;
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
    const Eigen::MatrixXd v = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
    const auto e = ConvexFeasibleSet::Ellipsoid(SampleUnitBall(d, rng), v, 0.7);
    const Eigen::VectorXd theta = 5.0 * SampleGaussianVector(d, rng);
    const Eigen::VectorXd p = e.Project(theta);
    EXPECT_TRUE(e.Contains(p));
    EXPECT_LE((e.Project(p) - p).norm(), 1e-12 * std::max(1.0, p.norm()));
  }
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  EXPECT_THROW(ConvexFeasibleSet::Ellipsoid(Eigen::VectorXd::Zero(2), bad, 1.0),
               std::invalid_argument);
}

TEST(Mle, BalancedRewardsGiveZero) {
  std::vector<Observation> data;
  for (int k = 0; k < 3; ++k) {
    data.push_back({Eigen::VectorXd::Unit(3, k), 0.5});
    data.push_back({-Eigen::VectorXd::Unit(3, k), 0.5});
  }
  const Eigen::VectorXd th = MleExact(LinkKind::kLogistic, data, 1.0,
                                      ConvexFeasibleSet::Unconstrained(3));
  EXPECT_LE(th.norm(), 1e-12);
}

TEST(Mle, ScalarExample) {
  std::vector<Observation> data(10, {Eigen::VectorXd::Constant(1, 1.0), 1.0});
  const Eigen::VectorXd th = MleExact(LinkKind::kLogistic, data, 1.0,
                                      ConvexFeasibleSet::Unconstrained(1));
  const double root = Bisect(0.0, 5.0, [](double t) {
    return 10.0 * (1.0 / (1.0 + std::exp(-t)) - 1.0) + t;
  });
  EXPECT_NEAR(th(0), root, 1e-9);
  EXPECT_NEAR(th(0), 1.633506, 1e-6);
  EXPECT_LE(RegularizedGradient(LinkKind::kLogistic, data, 1.0, th).norm(),
            1e-10);
}

TEST(Mle, ConstrainedSolutionIsOnBoundaryAndOptimal) {
  Rng rng(21);
  const auto data = LogisticData(100, 3, 3.0, rng);
  const auto ball = ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(3), 0.5);
  const Eigen::VectorXd th = MleExact(LinkKind::kLogistic, data, 0.1, ball);
  EXPECT_NEAR(th.norm(), 0.5, 1e-8);
  const double best = RegularizedLoss(LinkKind::kLogistic, data, 0.1, th);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::VectorXd other = SampleUnitBall(3, rng) * 0.5;
    EXPECT_GE(RegularizedLoss(LinkKind::kLogistic, data, 0.1, other),
              best - 1e-9);
  }
}

TEST(Pgd, QuadraticLikeMinimizerRecovered) {
  // Linear link: the loss is a quadratic with minimizer solving the normal
  // equations.
  Rng rng(4);
  const Eigen::VectorXd c = SampleUnitBall(3, rng) * 0.5;
  std::vector<Observation> data;
  for (int k = 0; k < 3; ++k) {
    data.push_back({Eigen::VectorXd::Unit(3, k), c(k)});
  }
  PgdConfig cfg;
  cfg.iterations = 20000;
  cfg.step = 1.0;
  cfg.lipschitz = 2.0;
  const PgdResult r = PgdRun(LinkKind::kLinear, data,
                             ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(3), 2),
                             cfg, rng);
  EXPECT_LE((r.theta - c).norm(), 1e-3);
}

TEST(Pgd, StaysAtMinimizer) {
  Rng rng(5);
  std::vector<Observation> data = {{Eigen::VectorXd::Unit(2, 0), 0.5}};
  PgdConfig cfg;
  cfg.iterations = 50;
  cfg.step = 123.0;
  const PgdResult r = PgdRun(LinkKind::kLogistic, data,
                             ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(2), 1),
                             cfg, rng);
  EXPECT_EQ(r.theta, Eigen::VectorXd::Zero(2));
}

TEST(Pgd, ExactChannelMatchesMle) {
  Rng rng(6);
  for (int inst = 0; inst < 20; ++inst) {
    const int d = 1 + inst % 5;
    const int n = 200;
    const auto data = LogisticData(n, d, 2.0, rng);
    const double ridge = 0.05;
    const auto ball = ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(d), 20.0);
    const Eigen::VectorXd mle =
        MleExact(LinkKind::kLogistic, data, ridge * n,
                 ConvexFeasibleSet::Unconstrained(d));
    ASSERT_LT(mle.norm(), 20.0);
    PgdConfig cfg;
    cfg.iterations = 10000;
    cfg.step = 2.0;
    cfg.ridge_per_point = ridge;
    const PgdResult r = PgdRun(LinkKind::kLogistic, data, ball, cfg, rng);
    const double gap =
        RegularizedLoss(LinkKind::kLogistic, data, ridge * n, r.theta) -
        RegularizedLoss(LinkKind::kLogistic, data, ridge * n, mle);
    EXPECT_GE(gap, -1e-9);
    EXPECT_LE(gap, 1e-6 * n) << "instance " << inst;
  }
}

TEST(Pgd, IteratesStayFeasible) {
  Rng rng(8);
  const auto data = LogisticData(50, 3, 3.0, rng);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(3, 3) * 4.0;
  const auto e = ConvexFeasibleSet::Ellipsoid(Eigen::VectorXd::Zero(3), v, 0.5);
  PgdConfig cfg;
  cfg.iterations = 300;
  cfg.average_iterates = false;
  const PgdResult r = PgdRun(LinkKind::kLogistic, data, e, cfg, rng);
  EXPECT_TRUE(e.Contains(r.theta));
  cfg.average_iterates = true;
  EXPECT_TRUE(e.Contains(PgdRun(LinkKind::kLogistic, data, e, cfg, rng).theta));
}

TEST(Pgd, BudgetArithmetic) {
  Rng rng(9);
  const auto data = LogisticData(40, 2, 1.0, rng);
  PgdConfig cfg;
  cfg.eps = 0.8;
  cfg.delta = 1e-3;
  cfg.iterations = 30;
  cfg.channel = SumChannel::kGaussian;
  const PgdResult r = PgdRun(LinkKind::kLogistic, data,
                             ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(2), 1),
                             cfg, rng);
  EXPECT_NEAR(r.step_eps * 2 * std::sqrt(2 * 30 * std::log(1 / 1e-3)), 0.8,
              1e-14);
  EXPECT_NEAR(r.step_delta * 31, 1e-3, 1e-18);
  EXPECT_GT(r.gradient_noise_sigma, 0.0);
  // The zCDP conversion: eps = rho + 2 sqrt(rho ln(1/delta)) with
  // sigma = 2 L sqrt(T / (2 rho)).
  const double s = r.gradient_noise_sigma / (2 * cfg.lipschitz);
  const double rho = 30.0 / (2 * s * s);
  EXPECT_NEAR(rho + 2 * std::sqrt(rho * std::log(1 / 1e-3)), 0.8, 1e-12);
}

TEST(Pgd, DefaultIterationsAndErrors) {
  EXPECT_EQ(DefaultPgdIterations(10, 3, 0.01, 0.1, 100000), 1);
  EXPECT_EQ(DefaultPgdIterations(1000000, 2, 10, 1e-6, 100000), 100000);
  const std::int64_t n = 200;
  const double expected =
      std::ceil(1.0 * n * n / (3 * std::pow(std::log(n * 3 / 1e-2), 3)));
  EXPECT_EQ(DefaultPgdIterations(n, 3, 1.0, 1e-2, 100000),
            static_cast<std::int64_t>(expected));
  Rng rng(1);
  PgdConfig cfg;
  EXPECT_THROW(PgdRun(LinkKind::kLogistic, {},
                      ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(2), 1), cfg,
                      rng),
               std::invalid_argument);
  std::vector<Observation> one = {{Eigen::VectorXd::Unit(2, 0), 1.0}};
  cfg.eps = 0.0;
  EXPECT_THROW(PgdRun(LinkKind::kLogistic, one,
                      ConvexFeasibleSet::Ball(Eigen::VectorXd::Zero(2), 1), cfg,
                      rng),
               std::invalid_argument);
  cfg.eps = 1.0;
  EXPECT_THROW(PgdRun(LinkKind::kLogistic, one,
                      ConvexFeasibleSet::Unconstrained(2), cfg, rng),
               std::invalid_argument);
}

}  // namespace
}  // namespace dpglm
