#pragma once

#include <Eigen/Dense>
#include <vector>

namespace netobs {

// One term of an affine matrix expression: variable index times a fixed
// symmetric coefficient matrix.
struct AffineTerm {
  int var = 0;
  Eigen::MatrixXd coeff;
};

// A symmetric-matrix-valued affine function of the scalar decision vector y,
//   F(y) = constant + sum_k terms[k].coeff * y[terms[k].var],
// required to satisfy F(y) < 0 (negative definite).
struct AffineConstraint {
  Eigen::MatrixXd constant;
  std::vector<AffineTerm> terms;

  Eigen::Index dim() const { return constant.rows(); }
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& y) const;
};

// A conjunction of negative-definiteness constraints over one shared decision
// vector. Every coefficient matrix is symmetric, so feasibility in y is a
// semidefinite feasibility problem.
struct ConstraintSystem {
  int num_vars = 0;
  std::vector<AffineConstraint> blocks;

  void validate() const;  // dimension and symmetry checks, throws DimensionError

  // max over blocks of the largest eigenvalue of F_j(y); negative iff y is
  // strictly feasible.
  double max_eigenvalue(const Eigen::VectorXd& y) const;

  // Feasibility margin -max_eigenvalue(y); positive iff strictly feasible.
  double margin(const Eigen::VectorXd& y) const { return -max_eigenvalue(y); }
};

}  // namespace netobs
