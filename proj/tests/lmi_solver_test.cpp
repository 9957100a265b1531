#include "netobs/lmi.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "netobs/errors.hpp"
#include "netobs/sdp.hpp"

namespace netobs {
namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(AffineConstraintType, EvaluatesAffineCombination) {
  AffineConstraint block;
  block.constant = mat2(1.0, 0.0, 0.0, -1.0);
  block.terms.push_back({0, mat2(0.0, 1.0, 1.0, 0.0)});
  block.terms.push_back({1, mat2(2.0, 0.0, 0.0, 0.0)});

  Eigen::VectorXd y(2);
  y << 3.0, 0.5;
  const Eigen::MatrixXd value = block.evaluate(y);
  EXPECT_DOUBLE_EQ(value(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(value(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(value(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(value(1, 1), -1.0);
}

TEST(ConstraintSystemType, ValidateCatchesShapeAndIndexErrors) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(0.0, 0.0, 0.0, 0.0);
  block.terms.push_back({0, mat2(1.0, 0.0, 0.0, 1.0)});
  sys.blocks.push_back(block);
  EXPECT_NO_THROW(sys.validate());

  ConstraintSystem asym = sys;
  asym.blocks[0].constant = mat2(0.0, 1.0, 0.0, 0.0);
  EXPECT_THROW(asym.validate(), DimensionError);

  ConstraintSystem mismatched = sys;
  mismatched.blocks[0].terms[0].coeff = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(mismatched.validate(), DimensionError);

  ConstraintSystem badvar = sys;
  badvar.blocks[0].terms[0].var = 7;
  EXPECT_THROW(badvar.validate(), DimensionError);
}

TEST(ConstraintSystemType, MarginMatchesEigenvalues) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(-2.0, 0.0, 0.0, -3.0);
  block.terms.push_back({0, mat2(1.0, 0.0, 0.0, 0.0)});
  sys.blocks.push_back(block);

  Eigen::VectorXd y(1);
  y << 1.0;
  EXPECT_NEAR(sys.max_eigenvalue(y), -1.0, 1e-12);
  EXPECT_NEAR(sys.margin(y), 1.0, 1e-12);
}

// diag(-1 + y, -1 - y) < 0 holds on the open interval |y| < 1.
TEST(LogDetBarrierSolverSuite, FindsInteriorOfScalarInterval) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(-1.0, 0.0, 0.0, -1.0);
  block.terms.push_back({0, mat2(1.0, 0.0, 0.0, -1.0)});
  sys.blocks.push_back(block);

  const SolveResult result = solve_feasibility(sys);
  EXPECT_EQ(result.status, SolveStatus::kFeasible);
  EXPECT_LT(std::abs(result.y(0)), 1.0);
  EXPECT_GT(result.margin, 1e-7);
  EXPECT_NEAR(sys.margin(result.y), result.margin, 1e-12);
}

// [[-1, y], [y, -1]] is negative definite exactly when |y| < 1; the origin
// already works, so the solver should exit quickly with a wide margin.
TEST(LogDetBarrierSolverSuite, AcceptsOriginWhenAlreadyFeasible) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(-1.0, 0.0, 0.0, -1.0);
  block.terms.push_back({0, mat2(0.0, 1.0, 1.0, 0.0)});
  sys.blocks.push_back(block);

  const SolveResult result = solve_feasibility(sys);
  EXPECT_EQ(result.status, SolveStatus::kFeasible);
  EXPECT_GT(result.margin, 0.5);
}

// A constraint with a positive semidefinite constant and no useful variable
// direction: [[1, y], [y, 1]] has trace 2 for every y, so it can never be
// negative definite.
TEST(LogDetBarrierSolverSuite, ProvesConstantObstructionInfeasible) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(1.0, 0.0, 0.0, 1.0);
  block.terms.push_back({0, mat2(0.0, 1.0, 1.0, 0.0)});
  sys.blocks.push_back(block);

  const SolveResult result = solve_feasibility(sys);
  EXPECT_EQ(result.status, SolveStatus::kInfeasible);
  EXPECT_GT(result.lower_bound, -1e-7);
}

// Homogeneous and self-contradictory: diag(y, -y) needs y < 0 and y > 0 at
// once. The best slack is exactly zero, which the margin policy classifies
// as infeasible.
TEST(LogDetBarrierSolverSuite, HomogeneousContradictionIsInfeasible) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = Eigen::MatrixXd::Zero(2, 2);
  block.terms.push_back({0, mat2(1.0, 0.0, 0.0, -1.0)});
  sys.blocks.push_back(block);

  const SolveResult result = solve_feasibility(sys);
  EXPECT_EQ(result.status, SolveStatus::kInfeasible);
}

// Two blocks with opposite needs on a shared variable.
TEST(LogDetBarrierSolverSuite, CrossBlockConflictIsInfeasible) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint needs_negative;
  needs_negative.constant = Eigen::MatrixXd::Constant(1, 1, 0.5);
  needs_negative.terms.push_back({0, Eigen::MatrixXd::Identity(1, 1)});
  AffineConstraint needs_positive;
  needs_positive.constant = Eigen::MatrixXd::Constant(1, 1, 0.5);
  needs_positive.terms.push_back({0, -Eigen::MatrixXd::Identity(1, 1)});
  sys.blocks.push_back(needs_negative);
  sys.blocks.push_back(needs_positive);

  const SolveResult result = solve_feasibility(sys);
  EXPECT_EQ(result.status, SolveStatus::kInfeasible);
}

// A feasible problem whose interior requires moving several variables: find
// y with y0 I < -I + y1 S for a fixed symmetric S.
TEST(LogDetBarrierSolverSuite, MultiVariableFeasibleProblem) {
  ConstraintSystem sys;
  sys.num_vars = 3;
  Eigen::MatrixXd s(3, 3);
  s << 2.0, 0.3, -0.1, 0.3, 1.0, 0.4, -0.1, 0.4, 1.5;

  // Block 1: y0 I + y1 S + y2 E - 4 I < 0.
  AffineConstraint upper;
  upper.constant = -4.0 * Eigen::MatrixXd::Identity(3, 3);
  upper.terms.push_back({0, Eigen::MatrixXd::Identity(3, 3)});
  upper.terms.push_back({1, s});
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
  e(0, 1) = e(1, 0) = 1.0;
  upper.terms.push_back({2, e});
  sys.blocks.push_back(upper);

  // Block 2: 1 - y0 < 0 forces y0 > 1.
  AffineConstraint lower;
  lower.constant = Eigen::MatrixXd::Identity(1, 1);
  lower.terms.push_back({0, -Eigen::MatrixXd::Identity(1, 1)});
  sys.blocks.push_back(lower);

  // Block 3: y1 - 1 < 0 keeps y1 below 1 so block 1 stays solvable.
  AffineConstraint cap;
  cap.constant = -Eigen::MatrixXd::Identity(1, 1);
  cap.terms.push_back({1, Eigen::MatrixXd::Identity(1, 1)});
  sys.blocks.push_back(cap);

  const SolveResult result = solve_feasibility(sys);
  ASSERT_EQ(result.status, SolveStatus::kFeasible);
  EXPECT_GT(result.y(0), 1.0);
  EXPECT_LT(result.y(1), 1.0);
  EXPECT_GT(sys.margin(result.y), 0.0);
}

TEST(LogDetBarrierSolverSuite, StageBudgetExhaustionReportsUndecided) {
  // Feasible only in a thin sliver far from the analytic center, with a
  // single barrier stage allowed: the solver cannot certify either way.
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint band;
  band.constant = mat2(-1e-4, 0.0, 0.0, 2000.0);
  band.terms.push_back({0, mat2(1e-4, 0.0, 0.0, -1.0)});
  sys.blocks.push_back(band);

  BarrierOptions options;
  options.max_barrier_stages = 1;
  options.max_newton_per_stage = 2;
  const LogDetBarrierSolver solver(options);
  const SolveResult result = solver.solve(sys);
  EXPECT_EQ(result.status, SolveStatus::kUndecided);
}

TEST(LogDetBarrierSolverSuite, RejectsInvalidSystems) {
  ConstraintSystem sys;
  sys.num_vars = 1;
  AffineConstraint block;
  block.constant = mat2(0.0, 1.0, 0.0, 0.0);
  sys.blocks.push_back(block);
  const LogDetBarrierSolver solver;
  EXPECT_THROW(solver.solve(sys), DimensionError);
}

}  // namespace
}  // namespace netobs
