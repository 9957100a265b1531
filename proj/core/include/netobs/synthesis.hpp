#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "netobs/lmi.hpp"
#include "netobs/plant.hpp"
#include "netobs/protocol.hpp"
#include "netobs/sdp.hpp"

namespace netobs {

// Discretization of the plant over reception gaps. With sampling period T and
// a gap of d dropouts between receptions (duration (1 + d) T):
//   transition[d]   the state transition over one gap, exp(A (1 + d) T)
//   hold_integral   the integral of exp(A tau) for tau in [0, T]
//   correction[d]   n x n(1+d) block row mapping the stacked per-instant
//                   injection gains onto the state: block j holds
//                   hold_integral * transition[d - 1 - j] for j < d and
//                   hold_integral itself in the last slot.
// correction[d] composes the d + 1 zero-order-hold segments of a gap into a
// single linear map, which is what makes the error recursion exact.
struct LiftedDynamics {
  std::vector<Eigen::MatrixXd> transition;
  Eigen::MatrixXd hold_integral;
  std::vector<Eigen::MatrixXd> correction;

  int max_dropouts() const { return static_cast<int>(transition.size()) - 1; }
};

LiftedDynamics build_lifted_dynamics(const PlantModel& plant, double period,
                                     int max_dropouts);

// One observer synthesis instance. `lambda` is the scalar multiplier weight
// in the relaxed stability blocks; useful values are well above 1.
struct SynthesisProblem {
  PlantModel plant;
  double period = 0.0;
  int max_dropouts = 0;
  double lambda = 0.0;
  ScheduleMode mode = ScheduleMode::kRoundRobin;

  // Stages of the reception cycle: one per channel for round robin, a single
  // stage when every channel arrives together.
  int stages() const {
    return mode == ScheduleMode::kRoundRobin ? static_cast<int>(plant.output_dim()) : 1;
  }
  // Output matrix seen at stage s (0-based): the single row received then,
  // or all of C in concentrated mode.
  Eigen::MatrixXd stage_output(int s) const;
  // Number of measurement components a reception delivers.
  int innovation_width() const {
    return mode == ScheduleMode::kRoundRobin ? 1 : static_cast<int>(plant.output_dim());
  }

  void validate() const;
};

// Scalar layout of the decision vector. Variables are grouped per (stage s,
// gap length d) as the upper triangle of P_s^d, then X_s^d row major, then
// G_s^d row major.
struct VariableLayout {
  int n = 0;       // state dimension
  int stages = 0;  // reception cycle stages
  int width = 0;   // innovation width
  int depth = 0;   // max_dropouts + 1

  int sym_size() const { return n * (n + 1) / 2; }
  int group_stride() const { return sym_size() + n * n + n * width; }
  int group_base(int s, int d) const { return (s * depth + d) * group_stride(); }
  int p_offset(int s, int d) const { return group_base(s, d); }
  int x_offset(int s, int d) const { return group_base(s, d) + sym_size(); }
  int g_offset(int s, int d) const { return group_base(s, d) + sym_size() + n * n; }
  int total() const { return stages * depth * group_stride(); }

  // Index of the (a, b) entry, a <= b, within a symmetric group.
  int sym_index(int a, int b) const { return a * n - a * (a - 1) / 2 + (b - a); }
};

struct AssembledLmis {
  ConstraintSystem system;
  VariableLayout layout;
};

// Builds the feasibility system of the synthesis conditions: for every stage
// s, gap length d and successor gap length d', the 2n x 2n block
//   [ -P_s^d + He(X_s^d A_d - G_s^d C_s)      *
//     -(X_s^d)^T + lambda (X_s^d A_d - G_s^d C_s)   P_{s+1}^{d'} - lambda He(X_s^d) ]
// must be negative definite, together with one n x n block -P_s^d < 0 per
// (s, d) making each P positive definite. Stage indices wrap cyclically.
AssembledLmis assemble_lmis(const SynthesisProblem& problem,
                            const LiftedDynamics& lifted);

// Feasible point of the assembled system, unpacked into matrix form.
struct Certificate {
  ScheduleMode mode = ScheduleMode::kRoundRobin;
  double feasibility_margin = 0.0;
  std::vector<std::vector<Eigen::MatrixXd>> P;  // [stage][d], n x n symmetric
  std::vector<std::vector<Eigen::MatrixXd>> X;  // [stage][d], n x n
  std::vector<std::vector<Eigen::MatrixXd>> G;  // [stage][d], n x width

  int stages() const { return static_cast<int>(P.size()); }
  int depth() const { return P.empty() ? 0 : static_cast<int>(P.front().size()); }
};

Certificate extract_certificate(const Eigen::VectorXd& y, const VariableLayout& layout,
                                ScheduleMode mode, double margin);

// Inverse of extract_certificate; round trips exactly.
Eigen::VectorXd pack_certificate(const Certificate& cert, const VariableLayout& layout);

// Rescales a certificate to unit maximum entry. Both the feasibility margin
// and the recovered gains are invariant in sign and value respectively under
// uniform positive scaling, so this only tames the magnitudes in artifacts.
Certificate normalize_certificate(const Certificate& cert);

// Observer injection gains per (stage, dropout count), each n x width.
struct GainSchedule {
  ScheduleMode mode = ScheduleMode::kRoundRobin;
  std::vector<std::vector<Eigen::MatrixXd>> gains;  // [stage][sigma]

  int stages() const { return static_cast<int>(gains.size()); }
  int depth() const { return gains.empty() ? 0 : static_cast<int>(gains.front().size()); }
};

// Solves the triangular relation G_s^d = X_s^d * correction[d] * stack(L_s^0
// .. L_s^d) for the gains, gap length by gap length. Throws
// IllConditionedError when some X_s^d * hold_integral has condition number
// above `cond_limit`.
GainSchedule recover_gains(const Certificate& cert, const LiftedDynamics& lifted,
                           const SynthesisProblem& problem, double cond_limit = 1e12);

// Vertical stack of gains L_s^0 .. L_s^d, the layout correction[d] acts on.
Eigen::MatrixXd stacked_gains(const GainSchedule& gains, int stage, int d);

// Error transition across one gap of d dropouts entered at stage s:
//   transition[d] - correction[d] * stack(L_s^0..L_s^d) * C_s.
Eigen::MatrixXd closed_loop_matrix(const SynthesisProblem& problem,
                                   const LiftedDynamics& lifted,
                                   const GainSchedule& gains, int stage, int d);

// Direct Lyapunov re-check of a synthesis result, independent of the LMI
// variables X and G: every P_s^d must be positive definite and every
// M^T P_next M - P must be negative definite, with M the closed loop matrix
// over the corresponding gap.
struct VerificationReport {
  bool pass = false;
  double min_p_eigenvalue = 0.0;   // smallest eigenvalue over all P_s^d
  double worst_decrease = 0.0;     // largest eigenvalue over all decrease tests
  int num_decrease_tests = 0;
  int worst_stage = 0;             // block where worst_decrease occurred
  int worst_gap = 0;
  int worst_next_gap = 0;
};

VerificationReport verify_certificate(const Certificate& cert,
                                      const LiftedDynamics& lifted,
                                      const GainSchedule& gains,
                                      const SynthesisProblem& problem);

// End-to-end synthesis: assemble, solve, and when feasible extract the
// normalized certificate and recover gains.
struct SynthesisOutcome {
  LiftedDynamics lifted;
  SolveResult solve;
  std::optional<Certificate> certificate;
  std::optional<GainSchedule> gains;
};

SynthesisOutcome synthesize(const SynthesisProblem& problem,
                            const FeasibilitySolver& solver);
SynthesisOutcome synthesize(const SynthesisProblem& problem);

}  // namespace netobs
