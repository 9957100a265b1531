#include "netobs/lmi.hpp"

#include <Eigen/Eigenvalues>

#include "netobs/errors.hpp"

namespace netobs {

Eigen::MatrixXd AffineConstraint::evaluate(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd f = constant;
  for (const AffineTerm& term : terms) {
    if (term.var < 0 || term.var >= y.size()) {
      throw DimensionError("AffineConstraint: variable index " +
                           std::to_string(term.var) + " outside decision vector");
    }
    f += y(term.var) * term.coeff;
  }
  return f;
}

void ConstraintSystem::validate() const {
  if (num_vars < 1) throw DimensionError("ConstraintSystem: num_vars must be >= 1");
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const AffineConstraint& block = blocks[j];
    const Eigen::Index d = block.constant.rows();
    if (block.constant.cols() != d) {
      throw DimensionError("ConstraintSystem: block " + std::to_string(j) +
                           " constant is not square");
    }
    if ((block.constant - block.constant.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw DimensionError("ConstraintSystem: block " + std::to_string(j) +
                           " constant is not symmetric");
    }
    for (const AffineTerm& term : block.terms) {
      if (term.var < 0 || term.var >= num_vars) {
        throw DimensionError("ConstraintSystem: block " + std::to_string(j) +
                             " references variable " + std::to_string(term.var));
      }
      if (term.coeff.rows() != d || term.coeff.cols() != d) {
        throw DimensionError("ConstraintSystem: block " + std::to_string(j) +
                             " has a coefficient of mismatched size");
      }
      if ((term.coeff - term.coeff.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw DimensionError("ConstraintSystem: block " + std::to_string(j) +
                             " has a nonsymmetric coefficient");
      }
    }
  }
}

double ConstraintSystem::max_eigenvalue(const Eigen::VectorXd& y) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const AffineConstraint& block : blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block.evaluate(y),
                                                      Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return worst;
}

}  // namespace netobs
