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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "dpglm/shuffle_sum.h"

namespace dpglm {
namespace {

void CheckData(const std::vector<Observation>& data, Eigen::Index dim) {
  for (const Observation& o : data) {
    if (o.x.size() != dim) {
      throw std::invalid_argument("observation dimension mismatch");
    }
  }
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Objective of the inner Newton solve:
// RegularizedLoss + (nu / 2) (theta - c)^T A (theta - c).
struct Penalized {
  LinkKind link;
  const std::vector<Observation>* data;
  double ridge;
  double nu;
  const ConvexFeasibleSet* set;

  double Value(const Eigen::VectorXd& theta) const {
    double v = RegularizedLoss(link, *data, ridge, theta);
    if (nu > 0) {
      const double s = set->SetNorm(theta);
      v += 0.5 * nu * s * s;
    }
    return v;
  }

  Eigen::VectorXd Gradient(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g = RegularizedGradient(link, *data, ridge, theta);
    if (nu > 0) g += nu * (set->shape() * (theta - set->center()));
    return g;
  }

  Eigen::MatrixXd Hessian(const Eigen::VectorXd& theta) const {
    const Eigen::Index d = theta.size();
    Eigen::MatrixXd h = ridge * Eigen::MatrixXd::Identity(d, d);
    for (const Observation& o : *data) {
      h.selfadjointView<Eigen::Lower>().rankUpdate(
          o.x, MuDot(link, o.x.dot(theta)));
    }
    h = h.selfadjointView<Eigen::Lower>();
    if (nu > 0) h += nu * set->shape();
    return h;
  }
};

Eigen::VectorXd Newton(const Penalized& f, Eigen::VectorXd theta,
                       const MleOptions& options) {
  double value = f.Value(theta);
  Eigen::VectorXd grad = f.Gradient(theta);
  for (int it = 0; it < options.max_newton_iterations; ++it) {
    const double gnorm = grad.norm();
    if (gnorm <= options.gradient_tol) return theta;
    Eigen::MatrixXd h = f.Hessian(theta);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
      h.diagonal().array() += jitter;
      llt.compute(h);
      if (llt.info() != Eigen::Success) {
        throw std::runtime_error("MLE Newton: singular Hessian at iteration " +
                                 std::to_string(it));
      }
    }
    const Eigen::VectorXd dir = -llt.solve(grad);
    const double slope = grad.dot(dir);
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd next;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + t * dir;
      const double next_value = f.Value(next);
      if (next_value <= value + 1e-4 * t * slope) {
        value = next_value;
        accepted = true;
        break;
      }
      // Near the optimum the loss stalls at rounding level; a full step that
      // still shrinks the gradient is the right move.
      if (t == 1.0 && f.Gradient(next).norm() < 0.5 * gnorm) {
        value = next_value;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      throw std::runtime_error("MLE Newton: line search failed, |grad| = " +
                               Num(gnorm));
    }
    theta = std::move(next);
    grad = f.Gradient(theta);
  }
  if (grad.norm() <= options.gradient_tol) return theta;
  throw std::runtime_error(
      "MLE Newton: no convergence after " +
      std::to_string(options.max_newton_iterations) +
      " iterations, |grad| = " + Num(grad.norm()));
}

}  // namespace

ConvexFeasibleSet ConvexFeasibleSet::Unconstrained(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  ConvexFeasibleSet set;
  set.kind_ = Kind::kUnconstrained;
  set.center_ = Eigen::VectorXd::Zero(dim);
  set.radius_ = std::numeric_limits<double>::infinity();
  set.shape_ = Eigen::MatrixXd::Identity(dim, dim);
  set.shape_values_ = Eigen::VectorXd::Ones(dim);
  set.shape_vectors_ = set.shape_;
  return set;
}

ConvexFeasibleSet ConvexFeasibleSet::Ball(Eigen::VectorXd center,
                                          double radius) {
  if (center.size() < 1) throw std::invalid_argument("empty center");
  if (!(radius >= 0)) throw std::invalid_argument("radius must be >= 0");
  ConvexFeasibleSet set;
  const Eigen::Index d = center.size();
  set.kind_ = Kind::kBall;
  set.center_ = std::move(center);
  set.radius_ = radius;
  set.shape_ = Eigen::MatrixXd::Identity(d, d);
  set.shape_values_ = Eigen::VectorXd::Ones(d);
  set.shape_vectors_ = set.shape_;
  return set;
}

ConvexFeasibleSet ConvexFeasibleSet::Ellipsoid(Eigen::VectorXd center,
                                               const Eigen::MatrixXd& shape,
                                               double radius) {
  if (center.size() < 1) throw std::invalid_argument("empty center");
  if (shape.rows() != center.size() || shape.cols() != center.size()) {
    throw std::invalid_argument("ellipsoid shape dimension mismatch");
  }
  if (!(radius >= 0)) throw std::invalid_argument("radius must be >= 0");
  const double scale = std::max(1.0, shape.cwiseAbs().maxCoeff());
  if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("ellipsoid shape is not symmetric");
  }
  ConvexFeasibleSet set;
  set.kind_ = Kind::kEllipsoid;
  set.center_ = std::move(center);
  set.radius_ = radius;
  set.shape_ = 0.5 * (shape + shape.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(set.shape_);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues()(0) > 0)) {
    throw std::invalid_argument("ellipsoid shape is not positive definite");
  }
  set.shape_values_ = eig.eigenvalues();
  set.shape_vectors_ = eig.eigenvectors();
  return set;
}

double ConvexFeasibleSet::SetNorm(const Eigen::VectorXd& theta) const {
  if (theta.size() != center_.size()) {
    throw std::invalid_argument("projection dimension mismatch");
  }
  const Eigen::VectorXd u = theta - center_;
  if (kind_ == Kind::kEllipsoid) {
    return std::sqrt(std::max(0.0, u.dot(shape_ * u)));
  }
  return u.norm();
}

bool ConvexFeasibleSet::Contains(const Eigen::VectorXd& theta,
                                 double tol) const {
  if (kind_ == Kind::kUnconstrained) return true;
  return SetNorm(theta) <= radius_ + tol;
}

Eigen::VectorXd ConvexFeasibleSet::Project(const Eigen::VectorXd& theta) const {
  const double norm = SetNorm(theta);
  if (kind_ == Kind::kUnconstrained || norm <= radius_) return theta;
  if (kind_ == Kind::kBall) {
    return center_ + (radius_ / norm) * (theta - center_);
  }
  // Minimize |y - theta|^2 subject to |y - c|_V <= r. In V's eigenbasis the
  // KKT point is u_i = w_i / (1 + nu v_i), with nu found by bisection on the
  // decreasing map nu -> sum v_i u_i^2.
  const Eigen::VectorXd w = shape_vectors_.transpose() * (theta - center_);
  const double r2 = radius_ * radius_;
  auto excess = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double u = w(i) / (1.0 + nu * shape_values_(i));
      s += shape_values_(i) * u * u;
    }
    return s - r2;
  };
  double lo = 0.0;
  double hi = 1.0 / shape_values_(0);
  while (excess(hi) > 0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) {
      throw std::runtime_error("ellipsoid projection bracket failed");
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Eigen::VectorXd u(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    u(i) = w(i) / (1.0 + hi * shape_values_(i));
  }
  Eigen::VectorXd y = center_ + shape_vectors_ * u;
  // Rotating back can push the point a rounding error outside.
  const double back = SetNorm(y);
  if (back > radius_) y = center_ + (radius_ / back) * (y - center_);
  return y;
}

double ConvexFeasibleSet::Diameter() const {
  switch (kind_) {
    case Kind::kUnconstrained:
      return std::numeric_limits<double>::infinity();
    case Kind::kBall:
      return 2.0 * radius_;
    case Kind::kEllipsoid:
      return 2.0 * radius_ / std::sqrt(shape_values_(0));
  }
  return std::numeric_limits<double>::infinity();
}

double RegularizedLoss(LinkKind link, const std::vector<Observation>& data,
                       double total_ridge, const Eigen::VectorXd& theta) {
  CheckData(data, theta.size());
  double sum = 0.0;
  for (const Observation& o : data) {
    sum += PointwiseLoss(link, theta, o.x, o.reward);
  }
  return sum + 0.5 * total_ridge * theta.squaredNorm();
}

Eigen::VectorXd RegularizedGradient(LinkKind link,
                                    const std::vector<Observation>& data,
                                    double total_ridge,
                                    const Eigen::VectorXd& theta) {
  CheckData(data, theta.size());
  Eigen::VectorXd g = total_ridge * theta;
  for (const Observation& o : data) {
    g += (Mu(link, o.x.dot(theta)) - o.reward) * o.x;
  }
  return g;
}

std::string_view SumChannelName(SumChannel channel) {
  switch (channel) {
    case SumChannel::kExact:
      return "exact";
    case SumChannel::kGaussian:
      return "gaussian";
    case SumChannel::kShuffle:
      return "shuffle";
  }
  return "unknown";
}

SumChannel ParseSumChannel(std::string_view name) {
  if (name == "exact") return SumChannel::kExact;
  if (name == "gaussian") return SumChannel::kGaussian;
  if (name == "shuffle") return SumChannel::kShuffle;
  throw std::invalid_argument("unknown summation channel: " +
                              std::string(name));
}

std::int64_t DefaultPgdIterations(std::int64_t n, int d, double eps,
                                  double delta, std::int64_t max_iterations) {
  const double nd = static_cast<double>(n) * d;
  const double lg = std::log(nd / delta);
  const double raw = eps * eps * static_cast<double>(n) *
                     static_cast<double>(n) / (d * lg * lg * lg);
  const double capped = std::min(std::ceil(raw),
                                 static_cast<double>(max_iterations));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(capped));
}

double GaussianGradientSigma(double eps, double delta, std::int64_t iterations,
                             double lipschitz) {
  if (!(eps > 0) || !(delta > 0 && delta < 1) || iterations < 1) {
    throw std::invalid_argument("Gaussian channel budget misconfigured");
  }
  const double lg = std::log(1.0 / delta);
  const double root = std::sqrt(lg + eps) - std::sqrt(lg);
  const double rho = root * root;
  return 2.0 * lipschitz *
         std::sqrt(static_cast<double>(iterations) / (2.0 * rho));
}

PgdResult PgdRun(LinkKind link, const std::vector<Observation>& data,
                 const ConvexFeasibleSet& set, const PgdConfig& cfg,
                 Rng& rng) {
  if (data.empty()) throw std::invalid_argument("P_GD needs data");
  const int d = set.dim();
  CheckData(data, d);
  if (!(cfg.eps > 0) || !(cfg.delta > 0 && cfg.delta < 1)) {
    throw std::invalid_argument("P_GD budget must satisfy eps > 0, 0 < delta < 1");
  }
  if (!(cfg.lipschitz > 0)) throw std::invalid_argument("lipschitz must be > 0");
  if (cfg.max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  const auto n = static_cast<std::int64_t>(data.size());

  PgdResult result;
  result.iterations = cfg.iterations.value_or(
      DefaultPgdIterations(n, d, cfg.eps, cfg.delta, cfg.max_iterations));
  if (result.iterations < 1) {
    throw std::invalid_argument("P_GD iterations must be >= 1");
  }
  const double steps = static_cast<double>(result.iterations);
  result.step = cfg.step.value_or(2.0 * set.Diameter() /
                                  (cfg.lipschitz * std::sqrt(steps)));
  if (!std::isfinite(result.step) || !(result.step > 0)) {
    throw std::invalid_argument(
        "P_GD step is undefined; unbounded sets need an explicit step");
  }
  result.step_eps =
      cfg.eps / (2.0 * std::sqrt(2.0 * steps * std::log(1.0 / cfg.delta)));
  result.step_delta = cfg.delta / (steps + 1.0);

  ProtocolParams params;
  if (cfg.channel == SumChannel::kShuffle) {
    params = DeriveProtocolParams(n, d, result.step_eps, result.step_delta,
                                  cfg.shuffle_cb, cfg.lipschitz);
  } else if (cfg.channel == SumChannel::kGaussian) {
    result.gradient_noise_sigma = GaussianGradientSigma(
        cfg.eps, cfg.delta, result.iterations, cfg.lipschitz);
  }
  const bool clip = cfg.channel != SumChannel::kExact;

  Eigen::VectorXd theta;
  if (cfg.theta0.has_value()) {
    theta = *cfg.theta0;
  } else if (set.kind() == ConvexFeasibleSet::Kind::kEllipsoid) {
    theta = set.center();
  } else {
    theta = Eigen::VectorXd::Zero(d);
  }
  if (theta.size() != d) throw std::invalid_argument("theta0 dimension");
  theta = set.Project(theta);

  std::ofstream trace;
  if (!cfg.trace_path.empty()) {
    trace.open(cfg.trace_path);
    if (!trace) {
      throw std::runtime_error("cannot open trace file " + cfg.trace_path);
    }
    trace << "step,loss,gradient_norm\n";
  }

  Eigen::VectorXd average = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum(d);
  std::vector<Eigen::VectorXd> grads;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::int64_t t = 0; t < result.iterations; ++t) {
    average += theta;
    sum.setZero();
    if (cfg.channel == SumChannel::kShuffle) grads.clear();
    for (const Observation& o : data) {
      Eigen::VectorXd g = (Mu(link, o.x.dot(theta)) - o.reward) * o.x +
                          cfg.ridge_per_point * theta;
      if (clip) {
        const double norm = g.norm();
        if (norm > cfg.lipschitz) {
          g *= cfg.lipschitz / norm;
          ++result.clipped;
        }
      }
      if (cfg.channel == SumChannel::kShuffle) {
        grads.push_back(std::move(g));
      } else {
        sum += g;
      }
    }
    if (cfg.channel == SumChannel::kShuffle) {
      sum = ShuffledVectorSum(grads, params, rng);
    } else if (cfg.channel == SumChannel::kGaussian) {
      for (int k = 0; k < d; ++k) {
        sum(k) += result.gradient_noise_sigma * normal(rng);
      }
    }
    const Eigen::VectorXd mean_grad = inv_n * sum;
    if (trace.is_open()) {
      const double loss =
          inv_n * RegularizedLoss(link, data,
                                  cfg.ridge_per_point * static_cast<double>(n),
                                  theta);
      trace << t << ',' << Num(loss) << ',' << Num(mean_grad.norm()) << '\n';
    }
    theta = set.Project(theta - result.step * mean_grad);
  }
  result.theta = cfg.average_iterates ? Eigen::VectorXd(average / steps) : theta;
  return result;
}

Eigen::VectorXd MleExact(LinkKind link, const std::vector<Observation>& data,
                         double total_ridge, const ConvexFeasibleSet& set,
                         const MleOptions& options) {
  if (data.empty()) throw std::invalid_argument("MLE needs data");
  if (!(total_ridge >= 0)) throw std::invalid_argument("ridge must be >= 0");
  const int d = set.dim();
  CheckData(data, d);
  Eigen::VectorXd start =
      options.warm_start.value_or(Eigen::VectorXd::Zero(d));
  if (start.size() != d) throw std::invalid_argument("warm start dimension");

  Penalized f{link, &data, total_ridge, 0.0, &set};
  std::optional<Eigen::VectorXd> free_solution;
  try {
    free_solution = Newton(f, start, options);
  } catch (const std::runtime_error&) {
    if (set.kind() == ConvexFeasibleSet::Kind::kUnconstrained) throw;
  }
  if (set.kind() == ConvexFeasibleSet::Kind::kUnconstrained ||
      (free_solution.has_value() && set.SetNorm(*free_solution) <= set.radius())) {
    return *free_solution;
  }

  // The constraint is active: find the multiplier nu with
  // |theta(nu) - c| = r, where theta(nu) minimizes the penalized objective.
  const double r = set.radius();
  Eigen::VectorXd warm = set.Project(start);
  auto solve = [&](double nu) {
    Penalized g{link, &data, total_ridge, nu, &set};
    MleOptions inner = options;
    inner.gradient_tol = options.gradient_tol * std::max(1.0, nu);
    warm = Newton(g, warm, inner);
    return warm;
  };
  double lo = 0.0;
  double hi = 1.0;
  Eigen::VectorXd inside = solve(hi);
  while (set.SetNorm(inside) > r) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e300) throw std::runtime_error("MLE multiplier bracket failed");
    inside = solve(hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd candidate = solve(mid);
    if (set.SetNorm(candidate) > r) {
      lo = mid;
    } else {
      hi = mid;
      inside = std::move(candidate);
    }
  }
  return set.Project(inside);
}

}  // namespace dpglm
