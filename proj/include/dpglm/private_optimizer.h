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

// Private projected gradient descent over ridge-regularized GLM losses,
// Euclidean projections onto balls and ellipsoids, and an exact MLE oracle.

#ifndef DPGLM_PRIVATE_OPTIMIZER_H_
#define DPGLM_PRIVATE_OPTIMIZER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dpglm/glm.h"
#include "dpglm/random.h"

namespace dpglm {

struct Observation {
  Eigen::VectorXd x;
  double reward = 0.0;
};

// Closed convex set used by the optimizers.
//
// Ball: |theta - center|_2 <= radius.
// Ellipsoid: |theta - center|_V <= radius with V positive definite.
class ConvexFeasibleSet {
 public:
  enum class Kind { kUnconstrained, kBall, kEllipsoid };

  static ConvexFeasibleSet Unconstrained(int dim);
  static ConvexFeasibleSet Ball(Eigen::VectorXd center, double radius);
  // Throws if shape is not symmetric positive definite.
  static ConvexFeasibleSet Ellipsoid(Eigen::VectorXd center,
                                     const Eigen::MatrixXd& shape,
                                     double radius);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  // Identity for balls.
  const Eigen::MatrixXd& shape() const { return shape_; }

  // |theta - center| in the set's own norm.
  double SetNorm(const Eigen::VectorXd& theta) const;
  bool Contains(const Eigen::VectorXd& theta, double tol = 1e-9) const;
  // Euclidean projection. Points inside are returned unchanged.
  Eigen::VectorXd Project(const Eigen::VectorXd& theta) const;
  // 2 radius for balls, 2 radius / sqrt(lambda_min(V)) for ellipsoids,
  // +inf when unconstrained.
  double Diameter() const;

 private:
  ConvexFeasibleSet() = default;

  Kind kind_ = Kind::kUnconstrained;
  Eigen::VectorXd center_;
  double radius_ = 0.0;
  Eigen::MatrixXd shape_;
  Eigen::VectorXd shape_values_;   // eigenvalues of shape, ascending
  Eigen::MatrixXd shape_vectors_;  // matching eigenvectors
};

// sum_i loss(theta; x_i, r_i) + (total_ridge / 2) |theta|^2.
double RegularizedLoss(LinkKind link, const std::vector<Observation>& data,
                       double total_ridge, const Eigen::VectorXd& theta);
Eigen::VectorXd RegularizedGradient(LinkKind link,
                                    const std::vector<Observation>& data,
                                    double total_ridge,
                                    const Eigen::VectorXd& theta);

enum class SumChannel { kExact, kGaussian, kShuffle };
std::string_view SumChannelName(SumChannel channel);
SumChannel ParseSumChannel(std::string_view name);

struct PgdConfig {
  // Privacy budget of the whole call.
  double eps = 1.0;
  double delta = 1e-6;
  // Per-point Lipschitz bound. Private channels clip per-point gradients to
  // this L2 norm; it also sets the default step size.
  double lipschitz = 2.0;
  // Per-point ridge: each point contributes loss + (ridge / 2) |theta|^2.
  double ridge_per_point = 0.0;
  SumChannel channel = SumChannel::kExact;
  // Blanket-noise scale handed to the shuffle protocol.
  double shuffle_cb = 1.0;
  // Defaults: ceil(eps^2 n^2 / (d ln^3(n d / delta))) clamped to
  // [1, max_iterations], and 2 D / (L sqrt(T)).
  std::optional<std::int64_t> iterations;
  std::optional<double> step;
  std::int64_t max_iterations = 100000;
  // The averaged iterate is the private output. The last iterate is offered
  // for noise-free convergence checks.
  bool average_iterates = true;
  // Starting point. Defaults to 0, or the center for ellipsoids.
  std::optional<Eigen::VectorXd> theta0;
  // When non-empty, writes step,loss,gradient_norm per iteration.
  std::string trace_path;
};

struct PgdResult {
  Eigen::VectorXd theta;
  std::int64_t iterations = 0;
  double step = 0.0;
  // Per-step budget handed to the summation channel.
  double step_eps = 0.0;
  double step_delta = 0.0;
  // Std of the Gaussian noise added to the gradient sum (Gaussian channel).
  double gradient_noise_sigma = 0.0;
  // Per-point gradients clipped to the Lipschitz bound.
  std::int64_t clipped = 0;
};

// Default iteration count before clamping.
std::int64_t DefaultPgdIterations(std::int64_t n, int d, double eps,
                                  double delta, std::int64_t max_iterations);

// Gaussian-channel noise std on the gradient sum: the call's (eps, delta) is
// converted to a zCDP budget rho with eps = rho + 2 sqrt(rho ln(1/delta)),
// split evenly over the iterations, with replace-one sensitivity 2 L.
double GaussianGradientSigma(double eps, double delta, std::int64_t iterations,
                             double lipschitz);

// Projected gradient descent minimizing the mean of the per-point regularized
// losses over the set. Throws std::invalid_argument on bad configuration.
PgdResult PgdRun(LinkKind link, const std::vector<Observation>& data,
                 const ConvexFeasibleSet& set, const PgdConfig& cfg, Rng& rng);

struct MleOptions {
  double gradient_tol = 1e-10;
  int max_newton_iterations = 200;
  std::optional<Eigen::VectorXd> warm_start;
};

// Minimizes RegularizedLoss over the set by damped Newton. Constrained
// problems are solved through their Lagrangian: Newton for a fixed
// multiplier, bisection on the multiplier until the solution sits on the
// boundary. Throws std::runtime_error when Newton does not converge.
Eigen::VectorXd MleExact(LinkKind link, const std::vector<Observation>& data,
                         double total_ridge, const ConvexFeasibleSet& set,
                         const MleOptions& options = {});

}  // namespace dpglm

#endif  // DPGLM_PRIVATE_OPTIMIZER_H_
