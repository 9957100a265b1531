#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "netobs/errors.hpp"
#include "netobs/experiments.hpp"
#include "netobs/serialization.hpp"
#include "netobs/simulator.hpp"
#include "netobs/synthesis.hpp"

// Command line front end. Subcommands cover the stages of an experiment:
//   synth     solve the design conditions, write gains and certificate
//   verify    reload artifacts and re-run the direct Lyapunov re-check
//   simulate  run the closed loop against stored gains, write the trace
//   sweep     map feasibility over a (period, dropout bound) grid
//   pipeline  synth + verify + simulate in one run with a summary artifact
// Exit codes: 0 success, 2 synthesis found no feasible design, 3 the
// verification re-check failed, 4 malformed config or inputs.

namespace {

namespace fs = std::filesystem;

std::string artifact_path(const netobs::ExperimentConfig& config, const char* name) {
  return (fs::path(config.out_dir) / name).string();
}

const char* status_name(netobs::SolveStatus status) {
  switch (status) {
    case netobs::SolveStatus::kFeasible: return "feasible";
    case netobs::SolveStatus::kInfeasible: return "infeasible";
    default: return "undecided";
  }
}

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      throw netobs::ConfigError("--lambda-grid: not a number: '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(value) || value == 0.0) {
      throw netobs::ConfigError("--lambda-grid: entries must be finite and "
                                "nonzero, got '" + item + "'");
    }
    values.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw netobs::ConfigError("--lambda-grid: empty list");
  return values;
}

void print_verification(const netobs::VerificationReport& report) {
  std::printf("verification: %s (min P eigenvalue %.6e, worst decrease "
              "eigenvalue %.6e over %d tests)\n",
              report.pass ? "pass" : "FAIL", report.min_p_eigenvalue,
              report.worst_decrease, report.num_decrease_tests);
}

int run_synth(const netobs::ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  netobs::BarrierOptions options;
  options.target_margin = config.target_margin;
  const netobs::LogDetBarrierSolver solver(options);

  netobs::SynthesisProblem problem = config.problem();
  netobs::SynthesisOutcome outcome;
  bool feasible = false;
  for (const double lambda : config.lambda_attempts()) {
    problem.lambda = lambda;
    outcome = netobs::synthesize(problem, solver);
    std::printf("lambda %s: %s (margin %.3e, %d Newton steps)\n",
                netobs::format_double(lambda).c_str(),
                status_name(outcome.solve.status), outcome.solve.margin,
                outcome.solve.newton_steps);
    if (outcome.solve.status == netobs::SolveStatus::kFeasible) {
      feasible = true;
      break;
    }
  }
  if (!feasible) {
    std::fflush(stdout);
    std::fprintf(stderr, "synthesis failed: no multiplier attempt was feasible\n");
    return 2;
  }

  netobs::write_gains_json(*outcome.gains, artifact_path(config, "gains.json"));
  netobs::write_certificate_json(*outcome.certificate,
                                 artifact_path(config, "certificate.json"));
  const netobs::VerificationReport report = netobs::verify_certificate(
      *outcome.certificate, outcome.lifted, *outcome.gains, problem);
  netobs::write_verification_json(report,
                                  artifact_path(config, "verification.json"));
  print_verification(report);
  std::printf("wrote gains.json, certificate.json, verification.json to %s\n",
              config.out_dir.c_str());
  return report.pass ? 0 : 3;
}

int run_verify(const netobs::ExperimentConfig& config) {
  const netobs::GainSchedule gains =
      netobs::read_gains_json(artifact_path(config, "gains.json"));
  const netobs::Certificate cert =
      netobs::read_certificate_json(artifact_path(config, "certificate.json"));
  const netobs::SynthesisProblem problem = config.problem();
  const netobs::LiftedDynamics lifted = netobs::build_lifted_dynamics(
      config.plant, config.period, config.max_dropouts);
  const netobs::VerificationReport report =
      netobs::verify_certificate(cert, lifted, gains, problem);
  netobs::write_verification_json(report,
                                  artifact_path(config, "verification.json"));
  print_verification(report);
  return report.pass ? 0 : 3;
}

int run_simulate(const netobs::ExperimentConfig& config) {
  const Eigen::Index n = config.plant.state_dim();
  if (!(config.horizon > 0.0)) {
    throw netobs::ConfigError("horizon: required for simulation runs");
  }
  if (config.x0.size() != n || config.xhat0.size() != n) {
    throw netobs::ConfigError("x0: initial states must match the state dimension");
  }
  if (!config.seed && !config.scripted) {
    throw netobs::ConfigError("dropouts: required: give a seed or a scripted plan");
  }
  netobs::SimulationInputs sim;
  sim.plant = config.plant;
  sim.gains = netobs::read_gains_json(artifact_path(config, "gains.json"));
  sim.period = config.period;
  sim.x0 = config.x0;
  sim.xhat0 = config.xhat0;
  sim.u = config.u;
  if (config.scripted) {
    sim.plan = *config.scripted;
  } else {
    const int gaps = static_cast<int>(
                         std::floor(config.horizon / config.period + 1e-9)) +
                     2;
    sim.plan = netobs::generate_dropouts(config.max_dropouts, gaps, *config.seed);
  }
  sim.horizon = config.horizon;
  sim.output_grid = config.output_grid;

  const netobs::SimulationTrace trace = netobs::simulate(sim);
  fs::create_directories(config.out_dir);
  netobs::write_trace_csv(trace, artifact_path(config, "trace.csv"));
  std::printf("simulated %zu grid rows, %zu receptions; final error norm %.6e\n",
              trace.times.size(), trace.receptions.size(),
              trace.error_norm(trace.times.size() - 1));
  std::printf("wrote trace.csv to %s\n", config.out_dir.c_str());
  return 0;
}

int run_sweep(const netobs::ExperimentConfig& config) {
  const netobs::SolvabilityGrid grid = netobs::sweep_solvability(config, 0);
  fs::create_directories(config.out_dir);
  netobs::write_grid_csv(grid, artifact_path(config, "solvability.csv"));
  int feasible = 0;
  int infeasible = 0;
  int undecided = 0;
  for (const auto& row : grid.verdicts) {
    for (const netobs::Verdict v : row) {
      if (v == netobs::Verdict::kFeasible) ++feasible;
      else if (v == netobs::Verdict::kInfeasible) ++infeasible;
      else ++undecided;
    }
  }
  std::printf("sweep over %zu x %zu grid: %d feasible, %d infeasible, "
              "%d undecided\n",
              grid.dropout_bounds.size(), grid.periods.size(), feasible,
              infeasible, undecided);
  std::printf("wrote solvability.csv to %s\n", config.out_dir.c_str());
  return 0;
}

int run_full_pipeline(const netobs::ExperimentConfig& config) {
  const netobs::PipelineResult result = netobs::run_pipeline(config);
  for (const netobs::LambdaAttempt& attempt : result.attempts) {
    std::printf("lambda %s: %s (margin %.3e, %d Newton steps)\n",
                netobs::format_double(attempt.lambda).c_str(),
                status_name(attempt.status), attempt.margin,
                attempt.newton_steps);
  }
  if (result.verification) print_verification(*result.verification);
  if (result.trace) {
    std::printf("simulated %zu grid rows, %zu receptions; final error norm "
                "%.6e\n",
                result.trace->times.size(), result.trace->receptions.size(),
                result.trace->error_norm(result.trace->times.size() - 1));
  }
  std::fflush(stdout);
  switch (result.status) {
    case netobs::PipelineStatus::kOk:
      std::printf("pipeline ok; artifacts in %s\n", result.out_dir.c_str());
      break;
    case netobs::PipelineStatus::kSynthesisFailed:
      std::fprintf(stderr, "pipeline stopped: synthesis found no feasible design\n");
      break;
    case netobs::PipelineStatus::kVerificationFailed:
      std::fprintf(stderr, "pipeline stopped: verification re-check failed\n");
      break;
  }
  return static_cast<int>(result.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampled-data observer design and simulation over lossy "
               "round-robin networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string lambda_grid;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config JSON file")
        ->required();
    sub->add_option("--out-dir", out_dir,
                    "Override the config's output directory");
    sub->add_option("--seed", seed,
                    "Override the dropout source with this generator seed");
    sub->add_option("--lambda-grid", lambda_grid,
                    "Comma-separated multiplier attempts, tried in order");
  };

  CLI::App* synth = app.add_subcommand(
      "synth", "Solve the design conditions; write gains and certificate");
  CLI::App* verify = app.add_subcommand(
      "verify", "Reload stored gains and certificate and re-check them");
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run the closed loop with stored gains; write the trace");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Map design feasibility over the configured grid");
  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "Synthesize, verify, and simulate in one run");
  for (CLI::App* sub : {synth, verify, simulate, sweep, pipeline}) {
    add_common(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  try {
    netobs::ExperimentConfig config = netobs::load_config(config_path);
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) {
      config.seed = seed;
      config.scripted.reset();
    }
    if (active->count("--out-dir") > 0) config.out_dir = out_dir;
    if (active->count("--lambda-grid") > 0) {
      config.lambda_grid = parse_lambda_grid(lambda_grid);
    }

    if (active == synth) return run_synth(config);
    if (active == verify) return run_verify(config);
    if (active == simulate) return run_simulate(config);
    if (active == sweep) return run_sweep(config);
    return run_full_pipeline(config);
  } catch (const netobs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
