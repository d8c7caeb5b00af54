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

#include "dpglm/psd_matrix.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>

namespace dpglm {
namespace {

void CheckSize(const Eigen::MatrixXd& m, Eigen::Index rows) {
  if (m.rows() != rows || m.cols() != rows) {
    throw std::invalid_argument("matrix dimension mismatch");
  }
}

}  // namespace

double DefaultEigenFloor(int dim, double lambda) {
  const double root = 4.0 * std::sqrt(static_cast<double>(dim));
  return lambda * root / (root + 1.0);
}

DesignMatrix DesignMatrix::Regularized(int dim, double lambda) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
  return DesignMatrix(lambda * Eigen::MatrixXd::Identity(dim, dim),
                      DefaultEigenFloor(dim, lambda));
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd matrix, double eigen_floor)
    : matrix_(std::move(matrix)), floor_(eigen_floor) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw std::invalid_argument("design matrix must be square and non-empty");
  }
  const Eigen::MatrixXd sym = 0.5 * (matrix_ + matrix_.transpose());
  matrix_ = sym;
}

void DesignMatrix::RankOneUpdate(const Eigen::VectorXd& x, double weight) {
  if (x.size() != matrix_.rows()) {
    throw std::invalid_argument("rank-one update dimension mismatch");
  }
  if (!(weight >= 0)) throw std::invalid_argument("weight must be >= 0");
  if (weight == 0) return;
  matrix_.noalias() += weight * x * x.transpose();
  if (chol_.has_value()) {
    chol_->rankUpdate(x, weight);
    if (chol_->info() != Eigen::Success) chol_.reset();
  }
}

bool DesignMatrix::AddSymmetric(const Eigen::MatrixXd& increment) {
  CheckSize(increment, matrix_.rows());
  const double scale = std::max(1.0, increment.cwiseAbs().maxCoeff());
  if ((increment - increment.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale) {
    throw std::invalid_argument("increment is not symmetric");
  }
  matrix_ += 0.5 * (increment + increment.transpose());
  chol_.reset();
  return Repair();
}

bool DesignMatrix::Repair() {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_);
  Eigen::VectorXd values = eig.eigenvalues();
  // Reassembly can land a hair below the floor; that is not a violation.
  if (values.minCoeff() >= floor_ - 1e-10 * std::max(1.0, floor_)) {
    return false;
  }
  values = values.cwiseMax(floor_);
  const Eigen::MatrixXd& q = eig.eigenvectors();
  Eigen::MatrixXd rebuilt = q * values.asDiagonal() * q.transpose();
  matrix_ = 0.5 * (rebuilt + rebuilt.transpose());
  chol_.reset();
  return true;
}

const Eigen::LLT<Eigen::MatrixXd>& DesignMatrix::Factor() const {
  if (!chol_.has_value()) {
    chol_.emplace(matrix_);
    if (chol_->info() != Eigen::Success) {
      chol_.reset();
      throw std::runtime_error("design matrix is not positive definite");
    }
  }
  return *chol_;
}

double DesignMatrix::InverseNorm(const Eigen::VectorXd& x) const {
  if (x.size() != matrix_.rows()) {
    throw std::invalid_argument("norm dimension mismatch");
  }
  const Eigen::VectorXd y = Factor().matrixL().solve(x);
  return y.norm();
}

double DesignMatrix::Norm(const Eigen::VectorXd& x) const {
  if (x.size() != matrix_.rows()) {
    throw std::invalid_argument("norm dimension mismatch");
  }
  return std::sqrt(std::max(0.0, x.dot(matrix_ * x)));
}

Eigen::VectorXd DesignMatrix::Solve(const Eigen::VectorXd& b) const {
  return Factor().solve(b);
}

double DesignMatrix::LogDet() const {
  const auto& llt = Factor();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double DesignMatrix::MinEigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_,
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace dpglm
