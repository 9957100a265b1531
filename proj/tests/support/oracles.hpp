#pragma once

#include <Eigen/Dense>

#include "netobs/plant.hpp"
#include "netobs/protocol.hpp"
#include "netobs/rng.hpp"
#include "netobs/synthesis.hpp"

// Independent reference implementations used to pin down expected values.
// Each one deliberately takes a different computational route than the
// library code it checks.

namespace netobs::testing {

// Plain truncated power series for exp(M * t). Accurate to near machine
// precision when ||M * t||_1 is at most about 5; no scaling, no Pade.
Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& m, double t, int terms = 120);

// Composite Simpson quadrature of the integral of exp(M * tau) over [0, t],
// with the integrand evaluated by taylor_exp.
Eigen::MatrixXd simpson_exp_integral(const Eigen::MatrixXd& m, double t, int panels);

// Fixed-step RK4 integration of zdot = A z + c over [0, t].
Eigen::VectorXd rk4_affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& z0, double t, int steps);

// Error at each reception instant by the product recursion: fold the closed
// loop matrix of every realized gap onto the initial error. Entry 0 is eps0
// itself. Plan entry j gives the gap after reception j; the stage cycles
// from 0 in round-robin mode.
std::vector<Eigen::VectorXd> reception_error_recursion(const SynthesisProblem& problem,
                                                       const LiftedDynamics& lifted,
                                                       const GainSchedule& gains,
                                                       const DropoutPlan& plan,
                                                       const Eigen::VectorXd& eps0,
                                                       int num_receptions);

// Uniform random matrix with entries in [-scale, scale].
Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale);

// Random instance for simulator cross-checks: plant, arbitrary bounded gain
// schedule (not synthesized; the identities under test hold for any gains),
// initial states and a dropout plan.
struct RandomInstance {
  PlantModel plant;
  GainSchedule gains;
  double period = 0.0;
  int max_dropouts = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd xhat0;
  Eigen::VectorXd u;
  DropoutPlan plan;
};

RandomInstance random_instance(std::uint64_t seed);

}  // namespace netobs::testing
