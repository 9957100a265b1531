#pragma once

#include <Eigen/Dense>
#include <string>

#include "netobs/lmi.hpp"

namespace netobs {

enum class SolveStatus {
  kFeasible,    // a strictly feasible y with certified margin was found
  kInfeasible,  // no y in the search box reaches the target margin
  kUndecided    // iteration budget exhausted without either certificate
};

struct SolveResult {
  SolveStatus status = SolveStatus::kUndecided;
  Eigen::VectorXd y;          // best point seen (feasible point when kFeasible)
  double margin = 0.0;        // -max eigenvalue over blocks at y
  double t_final = 0.0;       // slack level reached by the path following
  double lower_bound = 0.0;   // proven lower bound on the optimal slack
  int newton_steps = 0;
  int barrier_stages = 0;
  std::string detail;
};

struct BarrierOptions {
  // A point counts as feasible only when its margin is at least this value;
  // infeasibility means no point in the box reaches it. The constraints are
  // homogeneous in y for the synthesis problems solved here, so scaling blurs
  // the boundary only within this band.
  double target_margin = 1e-7;

  // Half-width of the box |y_k| <= box_radius that normalizes the search.
  double box_radius = 1e4;

  double mu_initial = 1.0;
  double mu_factor = 10.0;
  int max_barrier_stages = 40;
  int max_newton_per_stage = 120;

  // A barrier stage is considered centered once the squared Newton decrement
  // falls below this.
  double center_tol = 1e-2;
};

// Interface for semidefinite feasibility backends, so the synthesis layer is
// not tied to one algorithm.
class FeasibilitySolver {
 public:
  virtual ~FeasibilitySolver() = default;
  virtual SolveResult solve(const ConstraintSystem& system) const = 0;
};

// Phase-I interior point method on the epigraph variable t:
//   minimize t  subject to  F_j(y) - t I <= 0,  |y_k| <= box_radius,
// followed down the central path of the log-det barrier
//   mu t - sum_j logdet(t I - F_j(y)) - sum_k log(R^2 - y_k^2).
// The search stops early with kFeasible as soon as t drops below
// -target_margin, and with kInfeasible once the duality gap proves the
// optimal t stays above -target_margin.
class LogDetBarrierSolver final : public FeasibilitySolver {
 public:
  explicit LogDetBarrierSolver(BarrierOptions options = {}) : options_(options) {}

  SolveResult solve(const ConstraintSystem& system) const override;

  const BarrierOptions& options() const { return options_; }

 private:
  BarrierOptions options_;
};

// Convenience entry point with the default backend and options.
SolveResult solve_feasibility(const ConstraintSystem& system);

}  // namespace netobs
