#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "netobs/plant.hpp"
#include "netobs/protocol.hpp"
#include "netobs/synthesis.hpp"

namespace netobs {

// Snapshot of the closed loop at a sampling instant (or at time 0). The held
// values are the measurement delivered by the most recent reception and the
// matching observer output from the same instant; both stay frozen between
// receptions, which is what the injection term works from.
struct LoopState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd x_hat;
  Eigen::VectorXd held_sample;
  Eigen::VectorXd held_estimate;
  SchedulerState scheduler;
};

// Advances the closed loop one sampling interval at a time using the exact
// zero-order-hold discretization: within an interval both the plant input u
// and the observer injection are constant vectors, so the flow is
//   z(t + s) = exp(A s) z(t) + (integral of exp(A tau), tau in [0, s]) * const.
// No ODE stepping is involved; accuracy is that of the matrix exponential.
//
// Instances cache per-offset discretizations and are not safe for concurrent
// use; give each thread its own propagator.
class LoopPropagator {
 public:
  LoopPropagator(PlantModel plant, GainSchedule gains, double period);

  // State at time 0, right after the initial reception on channel 1 (all
  // channels in concentrated mode).
  LoopState initial_state(const Eigen::VectorXd& x0, const Eigen::VectorXd& xhat0) const;

  // One full interval [t, t + T) with constant input u (empty means zero).
  LoopState propagate_interval(const LoopState& state, const Eigen::VectorXd& u) const;

  // Plant state and estimate at t + offset, 0 <= offset <= T, without
  // committing the step.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_within(const LoopState& state,
                                                            double offset,
                                                            const Eigen::VectorXd& u) const;

  // Applies the transmission attempt at the sampling instant state.t (which
  // must lie on the sampling grid): advances the counters and, on a
  // reception, refreshes the held values from the current x and x_hat.
  LoopState apply_attempt(const LoopState& state, bool received) const;

  // Injection vector the observer integrates during the current interval.
  Eigen::VectorXd injection(const LoopState& state) const;

  double period() const { return period_; }
  const PlantModel& plant() const { return plant_; }
  const GainSchedule& gains() const { return gains_; }

 private:
  Eigen::MatrixXd stage_rows(int pi) const;
  const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>& discretization(double offset) const;

  PlantModel plant_;
  GainSchedule gains_;
  double period_ = 0.0;
  Eigen::MatrixXd full_step_;      // exp(A T)
  Eigen::MatrixXd full_hold_;      // integral of exp(A tau) over [0, T]
  mutable std::map<double, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> offset_cache_;
};

struct ReceptionRecord {
  double time = 0.0;
  int channel = 1;
  Eigen::VectorXd sample;  // measurement components delivered
  Eigen::VectorXd error;   // x - x_hat at the reception instant
};

// Closed-loop trajectory sampled on a uniform output grid, plus the exact
// reception history. Counter columns hold the values governing the interval
// the row lies in (post-attempt at sampling instants).
struct SimulationTrace {
  double period = 0.0;
  std::vector<double> times;
  Eigen::MatrixXd x;      // one row per grid time
  Eigen::MatrixXd x_hat;  // same shape
  std::vector<int> pi;
  std::vector<int> sigma;
  DropoutPlan plan;
  std::vector<ReceptionRecord> receptions;

  Eigen::VectorXd error_row(std::size_t i) const { return x.row(i) - x_hat.row(i); }
  double error_norm(std::size_t i) const { return error_row(i).norm(); }
};

struct SimulationInputs {
  PlantModel plant;
  GainSchedule gains;
  double period = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd xhat0;
  Eigen::VectorXd u;  // constant input; empty means zero
  DropoutPlan plan;
  double horizon = 0.0;
  double output_grid = 0.0;  // row spacing; 0 picks period / 10
};

// Runs the loop over [0, horizon]. Receptions follow the dropout plan; the
// plan must provide enough gap entries to cover the horizon. Deterministic:
// identical inputs give identical traces, bit for bit.
SimulationTrace simulate(const SimulationInputs& in);

// CSV with header t,x1..xn,xhat1..xhatn,eps_norm,pi,sigma; doubles are
// printed with enough digits to round trip exactly.
void write_trace_csv(const SimulationTrace& trace, std::ostream& os);
void write_trace_csv(const SimulationTrace& trace, const std::string& path);

// Worst amplification of the reception-time error over any stretch between
// consecutive receptions, including all intermediate times:
//   sup over stages s, run positions tau in [0, (1 + dbar) T] of
//   || M_s(tau) ||  with  M_s the error transition from the last reception.
// Scanned on a uniform grid of 2000 points per sampling interval and then
// sharpened locally by golden section search.
struct IntersampleBound {
  double bound = 0.0;
  int stage = 0;       // stage attaining the bound
  double elapsed = 0.0;  // time since the reception where it is attained
};

IntersampleBound intersample_bound(const PlantModel& plant, const GainSchedule& gains,
                                   double period);

}  // namespace netobs
