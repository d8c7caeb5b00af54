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

#ifndef DPGLM_PSD_MATRIX_H_
#define DPGLM_PSD_MATRIX_H_

#include <optional>

#include <Eigen/Dense>

namespace dpglm {

// Smallest eigenvalue admitted after noise repair for a lambda-regularized
// d x d matrix: lambda * 4 sqrt(d) / (4 sqrt(d) + 1).
double DefaultEigenFloor(int dim, double lambda);

// A symmetric positive definite design matrix with a cached Cholesky factor.
//
// All ellipsoidal norms and log-determinants go through the factor. Rank-one
// additions update the factor in place; any other update drops it and it is
// recomputed on the next query.
class DesignMatrix {
 public:
  // lambda * I with the default eigenvalue floor. Throws on lambda <= 0.
  static DesignMatrix Regularized(int dim, double lambda);

  // Wraps an arbitrary matrix. The matrix is symmetrized on construction.
  DesignMatrix(Eigen::MatrixXd matrix, double eigen_floor);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double eigen_floor() const { return floor_; }
  void set_eigen_floor(double floor) { floor_ = floor; }

  // M += weight * x x^T. Throws on dimension mismatch or negative weight.
  void RankOneUpdate(const Eigen::VectorXd& x, double weight = 1.0);

  // M += increment, then clips eigenvalues below the floor up to the floor.
  // Returns true when a repair happened. Throws if increment is not symmetric.
  bool AddSymmetric(const Eigen::MatrixXd& increment);

  // Clips eigenvalues below the floor. Returns true if anything changed.
  bool Repair();

  // sqrt(x^T M^{-1} x).
  double InverseNorm(const Eigen::VectorXd& x) const;
  // sqrt(x^T M x).
  double Norm(const Eigen::VectorXd& x) const;
  // M^{-1} b.
  Eigen::VectorXd Solve(const Eigen::VectorXd& b) const;

  double LogDet() const;
  double MinEigenvalue() const;

 private:
  const Eigen::LLT<Eigen::MatrixXd>& Factor() const;

  Eigen::MatrixXd matrix_;
  double floor_ = 0.0;
  mutable std::optional<Eigen::LLT<Eigen::MatrixXd>> chol_;
};

}  // namespace dpglm

#endif  // DPGLM_PSD_MATRIX_H_
