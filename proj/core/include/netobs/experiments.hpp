#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netobs/simulator.hpp"
#include "netobs/synthesis.hpp"

namespace netobs {

struct SweepSpec {
  std::vector<double> periods;
  std::vector<int> dropout_bounds;
};

// One experiment description, loaded from a JSON config. The synthesis
// triple (period, max_dropouts, lambda) is always required; simulation and
// sweep fields are checked by the operations that need them.
struct ExperimentConfig {
  PlantModel plant;
  double period = 0.0;
  int max_dropouts = 0;
  double lambda = 0.0;
  std::vector<double> lambda_grid;  // optional synthesis attempts, tried in order
  ScheduleMode mode = ScheduleMode::kRoundRobin;

  std::optional<std::uint64_t> seed;     // seeded dropout generation
  std::optional<DropoutPlan> scripted;   // or an explicit plan; at most one of the two
  double horizon = 0.0;                  // 0 means not configured
  Eigen::VectorXd x0;
  Eigen::VectorXd xhat0;
  Eigen::VectorXd u;                     // constant input, may be empty
  double output_grid = 0.0;              // 0 picks period / 10
  std::string out_dir = ".";
  double target_margin = 1e-7;           // solver feasibility band

  std::optional<SweepSpec> sweep;

  SynthesisProblem problem() const;
  // lambda_grid if present, otherwise just {lambda}.
  std::vector<double> lambda_attempts() const;
};

// Parses a config document. Errors name the offending field by its JSON
// path, e.g. "plant.A" or "sweep.periods[3]".
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

enum class PipelineStatus {
  kOk = 0,
  kSynthesisFailed = 2,     // no lambda attempt produced a feasible system
  kVerificationFailed = 3,  // gains recovered but the direct re-check failed
};

struct LambdaAttempt {
  double lambda = 0.0;
  SolveStatus status = SolveStatus::kUndecided;
  double margin = 0.0;
  int newton_steps = 0;
};

struct PipelineResult {
  PipelineStatus status = PipelineStatus::kSynthesisFailed;
  std::vector<LambdaAttempt> attempts;
  double lambda_used = 0.0;
  std::optional<Certificate> certificate;
  std::optional<GainSchedule> gains;
  std::optional<VerificationReport> verification;
  std::optional<IntersampleBound> bound;
  std::optional<SimulationTrace> trace;
  std::string out_dir;
};

// Full run: synthesize (trying each lambda attempt until one is feasible),
// verify, simulate, and write gains.json, certificate.json,
// verification.json, trace.csv and pipeline.json into out_dir. Artifacts are
// written as far as the run gets; the summary is always written.
// Requires horizon, x0, xhat0 and a dropout source in the config.
PipelineResult run_pipeline(const ExperimentConfig& config);

enum class Verdict { kFeasible, kInfeasible, kUndecided };

inline char verdict_char(Verdict v) {
  switch (v) {
    case Verdict::kFeasible: return 'F';
    case Verdict::kInfeasible: return 'I';
    default: return 'U';
  }
}

struct SolvabilityGrid {
  std::vector<double> periods;
  std::vector<int> dropout_bounds;
  // verdicts[i][j] is the outcome for dropout_bounds[i], periods[j].
  std::vector<std::vector<Verdict>> verdicts;
};

// Solves one synthesis per (period, dropout bound) grid point, trying the
// lambda attempts in order until one is feasible. Points are distributed
// over `num_workers` threads (0 picks the hardware count); every point is
// an independent solve, so the result does not depend on scheduling order.
SolvabilityGrid sweep_solvability(const ExperimentConfig& config, int num_workers = 0);

// CSV with dropout bounds as rows and periods as columns, cells F/I/U.
void write_grid_csv(const SolvabilityGrid& grid, std::ostream& os);
void write_grid_csv(const SolvabilityGrid& grid, const std::string& path);

}  // namespace netobs
