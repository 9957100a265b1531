#include "netobs/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "netobs/errors.hpp"
#include "netobs/sdp.hpp"
#include "netobs/serialization.hpp"

namespace netobs {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

const json& member(const json& j, const std::string& path, const std::string& field) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(field);
  if (it == j.end()) fail(path.empty() ? field : path + "." + field, "missing");
  return *it;
}

std::string join(const std::string& path, const std::string& field) {
  return path.empty() ? field : path + "." + field;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Eigen::VectorXd vector_at(const json& j, const std::string& path, Eigen::Index size) {
  if (!j.is_array()) fail(path, "expected an array");
  if (size >= 0 && static_cast<Eigen::Index>(j.size()) != size) {
    fail(path, "expected " + std::to_string(size) + " entries, got " +
                   std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        number_at(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Flat row-major matrix with an explicit shape from the surrounding fields.
Eigen::MatrixXd matrix_at(const json& j, const std::string& path, Eigen::Index rows,
                          Eigen::Index cols) {
  if (!j.is_array()) fail(path, "expected a flat row-major array");
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
    fail(path, "expected " + std::to_string(rows * cols) + " entries for a " +
                   std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                   std::to_string(j.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_at(j[static_cast<std::size_t>(r * cols + c)],
                          path + "[" + std::to_string(r * cols + c) + "]");
    }
  }
  return m;
}

PlantModel parse_plant(const json& j, const std::string& path) {
  PlantModel plant;
  const int n = integer_at(member(j, path, "state_dim"), join(path, "state_dim"));
  if (n < 1) fail(join(path, "state_dim"), "must be >= 1");
  const int p = integer_at(member(j, path, "output_dim"), join(path, "output_dim"));
  if (p < 1) fail(join(path, "output_dim"), "must be >= 1");
  int m = 0;
  if (j.contains("input_dim")) {
    m = integer_at(j["input_dim"], join(path, "input_dim"));
    if (m < 0) fail(join(path, "input_dim"), "must be >= 0");
  }
  plant.A = matrix_at(member(j, path, "A"), join(path, "A"), n, n);
  plant.C = matrix_at(member(j, path, "C"), join(path, "C"), p, n);
  if (m > 0) {
    plant.B = matrix_at(member(j, path, "B"), join(path, "B"), n, m);
  } else {
    plant.B = Eigen::MatrixXd(n, 0);
  }
  try {
    plant.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return plant;
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    default: return "undecided";
  }
}

std::string pipeline_status_name(PipelineStatus s) {
  switch (s) {
    case PipelineStatus::kOk: return "ok";
    case PipelineStatus::kSynthesisFailed: return "synthesis_failed";
    default: return "verification_failed";
  }
}

void write_pipeline_summary(const PipelineResult& res, const std::string& path) {
  std::string out = "{\n";
  out += "  \"status\": \"" + pipeline_status_name(res.status) + "\",\n";
  out += "  \"lambda_used\": " + format_double(res.lambda_used) + ",\n";
  out += "  \"attempts\": [";
  for (std::size_t i = 0; i < res.attempts.size(); ++i) {
    const LambdaAttempt& a = res.attempts[i];
    if (i > 0) out += ",";
    out += "\n    {\"lambda\": " + format_double(a.lambda) + ", \"status\": \"" +
           status_name(a.status) + "\", \"margin\": " + format_double(a.margin) +
           ", \"newton_steps\": " + std::to_string(a.newton_steps) + "}";
  }
  out += res.attempts.empty() ? "],\n" : "\n  ],\n";
  if (res.verification) {
    const VerificationReport& v = *res.verification;
    out += "  \"verification\": {\"pass\": ";
    out += v.pass ? "true" : "false";
    out += ", \"min_p_eigenvalue\": " + format_double(v.min_p_eigenvalue) +
           ", \"worst_decrease\": " + format_double(v.worst_decrease) +
           ", \"num_decrease_tests\": " + std::to_string(v.num_decrease_tests) + "},\n";
  } else {
    out += "  \"verification\": null,\n";
  }
  if (res.bound) {
    out += "  \"intersample_bound\": {\"bound\": " + format_double(res.bound->bound) +
           ", \"stage\": " + std::to_string(res.bound->stage) +
           ", \"elapsed\": " + format_double(res.bound->elapsed) + "}\n";
  } else {
    out += "  \"intersample_bound\": null\n";
  }
  out += "}\n";
  spill_file(path, out);
}

}  // namespace

SynthesisProblem ExperimentConfig::problem() const {
  SynthesisProblem prob;
  prob.plant = plant;
  prob.period = period;
  prob.max_dropouts = max_dropouts;
  prob.lambda = lambda;
  prob.mode = mode;
  return prob;
}

std::vector<double> ExperimentConfig::lambda_attempts() const {
  if (!lambda_grid.empty()) return lambda_grid;
  return {lambda};
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config: malformed JSON");
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig config;
  config.plant = parse_plant(member(j, "", "plant"), "plant");
  const Eigen::Index n = config.plant.state_dim();

  config.period = number_at(member(j, "", "period"), "period");
  if (!(config.period > 0.0)) fail("period", "must be positive");
  config.max_dropouts = integer_at(member(j, "", "max_dropouts"), "max_dropouts");
  if (config.max_dropouts < 0) fail("max_dropouts", "must be >= 0");
  config.lambda = number_at(member(j, "", "lambda"), "lambda");
  if (!std::isfinite(config.lambda) || config.lambda == 0.0) {
    fail("lambda", "must be a nonzero finite number");
  }

  if (j.contains("lambda_grid")) {
    const json& grid = j["lambda_grid"];
    if (!grid.is_array() || grid.empty()) fail("lambda_grid", "expected a nonempty array");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::string at = "lambda_grid[" + std::to_string(i) + "]";
      const double v = number_at(grid[i], at);
      if (!std::isfinite(v) || v == 0.0) fail(at, "must be a nonzero finite number");
      config.lambda_grid.push_back(v);
    }
  }

  if (j.contains("mode")) {
    const json& mode = j["mode"];
    if (!mode.is_string()) fail("mode", "expected a string");
    const std::string name = mode.get<std::string>();
    if (name == "round_robin") {
      config.mode = ScheduleMode::kRoundRobin;
    } else if (name == "concentrated") {
      config.mode = ScheduleMode::kConcentrated;
    } else {
      fail("mode", "must be 'round_robin' or 'concentrated'");
    }
  }

  if (j.contains("dropouts")) {
    const json& drops = j["dropouts"];
    if (!drops.is_object()) fail("dropouts", "expected an object");
    const bool has_seed = drops.contains("seed");
    const bool has_counts = drops.contains("counts");
    if (has_seed == has_counts) {
      fail("dropouts", "give exactly one of 'seed' or 'counts'");
    }
    if (has_seed) {
      if (!drops["seed"].is_number_unsigned() && !drops["seed"].is_number_integer()) {
        fail("dropouts.seed", "expected a nonnegative integer");
      }
      const auto seed = drops["seed"].get<std::int64_t>();
      if (seed < 0) fail("dropouts.seed", "expected a nonnegative integer");
      config.seed = static_cast<std::uint64_t>(seed);
    } else {
      DropoutPlan plan;
      plan.max_dropouts = config.max_dropouts;
      const json& counts = drops["counts"];
      if (!counts.is_array()) fail("dropouts.counts", "expected an array");
      for (std::size_t i = 0; i < counts.size(); ++i) {
        plan.counts.push_back(
            integer_at(counts[i], "dropouts.counts[" + std::to_string(i) + "]"));
      }
      try {
        plan.validate();
      } catch (const std::exception& e) {
        fail("dropouts.counts", e.what());
      }
      config.scripted = std::move(plan);
    }
  }

  if (j.contains("horizon")) {
    config.horizon = number_at(j["horizon"], "horizon");
    if (!(config.horizon > 0.0)) fail("horizon", "must be positive");
  }
  if (j.contains("x0")) config.x0 = vector_at(j["x0"], "x0", n);
  if (j.contains("xhat0")) config.xhat0 = vector_at(j["xhat0"], "xhat0", n);
  if (j.contains("u")) {
    config.u = vector_at(j["u"], "u", config.plant.input_dim());
  }
  if (j.contains("output_grid")) {
    config.output_grid = number_at(j["output_grid"], "output_grid");
    if (!(config.output_grid > 0.0)) fail("output_grid", "must be positive");
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) fail("out_dir", "expected a string");
    config.out_dir = j["out_dir"].get<std::string>();
  }
  if (j.contains("target_margin")) {
    config.target_margin = number_at(j["target_margin"], "target_margin");
    if (!(config.target_margin > 0.0)) fail("target_margin", "must be positive");
  }

  if (j.contains("sweep")) {
    const json& sweep = j["sweep"];
    SweepSpec spec;
    const json& periods = member(sweep, "sweep", "periods");
    if (!periods.is_array() || periods.empty()) {
      fail("sweep.periods", "expected a nonempty array");
    }
    for (std::size_t i = 0; i < periods.size(); ++i) {
      const std::string at = "sweep.periods[" + std::to_string(i) + "]";
      const double v = number_at(periods[i], at);
      if (!(v > 0.0)) fail(at, "must be positive");
      spec.periods.push_back(v);
    }
    const json& bounds = member(sweep, "sweep", "dropout_bounds");
    if (!bounds.is_array() || bounds.empty()) {
      fail("sweep.dropout_bounds", "expected a nonempty array");
    }
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const std::string at = "sweep.dropout_bounds[" + std::to_string(i) + "]";
      const int v = integer_at(bounds[i], at);
      if (v < 0) fail(at, "must be >= 0");
      spec.dropout_bounds.push_back(v);
    }
    config.sweep = std::move(spec);
  }

  return config;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(slurp_file(path));
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
  const Eigen::Index n = config.plant.state_dim();
  if (!(config.horizon > 0.0)) fail("horizon", "required for pipeline runs");
  if (config.x0.size() != n) fail("x0", "required with the state dimension");
  if (config.xhat0.size() != n) fail("xhat0", "required with the state dimension");
  if (!config.seed && !config.scripted) {
    fail("dropouts", "required: give a seed or a scripted plan");
  }

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const auto artifact = [&](const char* name) {
    return (fs::path(config.out_dir) / name).string();
  };

  BarrierOptions options;
  options.target_margin = config.target_margin;
  const LogDetBarrierSolver solver(options);

  PipelineResult res;
  res.out_dir = config.out_dir;

  SynthesisOutcome outcome;
  SynthesisProblem prob = config.problem();
  bool feasible = false;
  for (double lambda : config.lambda_attempts()) {
    prob.lambda = lambda;
    outcome = synthesize(prob, solver);
    res.attempts.push_back({lambda, outcome.solve.status, outcome.solve.margin,
                            outcome.solve.newton_steps});
    if (outcome.solve.status == SolveStatus::kFeasible) {
      res.lambda_used = lambda;
      feasible = true;
      break;
    }
  }
  if (!feasible) {
    res.status = PipelineStatus::kSynthesisFailed;
    write_pipeline_summary(res, artifact("pipeline.json"));
    return res;
  }

  res.certificate = outcome.certificate;
  res.gains = outcome.gains;
  write_gains_json(*res.gains, artifact("gains.json"));
  write_certificate_json(*res.certificate, artifact("certificate.json"));

  res.verification = verify_certificate(*res.certificate, outcome.lifted, *res.gains, prob);
  write_verification_json(*res.verification, artifact("verification.json"));
  if (!res.verification->pass) {
    res.status = PipelineStatus::kVerificationFailed;
    write_pipeline_summary(res, artifact("pipeline.json"));
    return res;
  }

  res.bound = intersample_bound(config.plant, *res.gains, config.period);

  SimulationInputs sim;
  sim.plant = config.plant;
  sim.gains = *res.gains;
  sim.period = config.period;
  sim.x0 = config.x0;
  sim.xhat0 = config.xhat0;
  sim.u = config.u;
  if (config.scripted) {
    sim.plan = *config.scripted;
  } else {
    const int gaps =
        static_cast<int>(std::floor(config.horizon / config.period + 1e-9)) + 2;
    sim.plan = generate_dropouts(config.max_dropouts, gaps, *config.seed);
  }
  sim.horizon = config.horizon;
  sim.output_grid = config.output_grid;
  res.trace = simulate(sim);
  write_trace_csv(*res.trace, artifact("trace.csv"));

  res.status = PipelineStatus::kOk;
  write_pipeline_summary(res, artifact("pipeline.json"));
  return res;
}

SolvabilityGrid sweep_solvability(const ExperimentConfig& config, int num_workers) {
  if (!config.sweep) fail("sweep", "required for sweep runs");
  const SweepSpec& spec = *config.sweep;

  SolvabilityGrid grid;
  grid.periods = spec.periods;
  grid.dropout_bounds = spec.dropout_bounds;
  grid.verdicts.assign(spec.dropout_bounds.size(),
                       std::vector<Verdict>(spec.periods.size(), Verdict::kUndecided));

  const std::size_t num_points = spec.periods.size() * spec.dropout_bounds.size();
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const std::vector<double> lambdas = config.lambda_attempts();
  BarrierOptions options;
  options.target_margin = config.target_margin;

  auto work = [&]() {
    const LogDetBarrierSolver solver(options);
    for (;;) {
      const std::size_t idx = cursor.fetch_add(1);
      if (idx >= num_points) return;
      const std::size_t di = idx / spec.periods.size();
      const std::size_t ti = idx % spec.periods.size();
      try {
        SynthesisProblem prob = config.problem();
        prob.period = spec.periods[ti];
        prob.max_dropouts = spec.dropout_bounds[di];
        const LiftedDynamics lifted =
            build_lifted_dynamics(prob.plant, prob.period, prob.max_dropouts);
        Verdict verdict = Verdict::kInfeasible;
        for (double lambda : lambdas) {
          prob.lambda = lambda;
          const SolveResult solve = solver.solve(assemble_lmis(prob, lifted).system);
          if (solve.status == SolveStatus::kFeasible) {
            verdict = Verdict::kFeasible;
            break;
          }
          if (solve.status == SolveStatus::kUndecided) verdict = Verdict::kUndecided;
        }
        grid.verdicts[di][ti] = verdict;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int workers = num_workers > 0 ? num_workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(num_points));

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  return grid;
}

void write_grid_csv(const SolvabilityGrid& grid, std::ostream& os) {
  std::string line = "max_dropouts";
  for (double t : grid.periods) line += "," + format_double(t);
  line += "\n";
  os << line;
  for (std::size_t i = 0; i < grid.dropout_bounds.size(); ++i) {
    line = std::to_string(grid.dropout_bounds[i]);
    for (std::size_t j = 0; j < grid.periods.size(); ++j) {
      line += ',';
      line += verdict_char(grid.verdicts[i][j]);
    }
    line += '\n';
    os << line;
  }
}

void write_grid_csv(const SolvabilityGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_grid_csv: cannot open " + path);
  write_grid_csv(grid, os);
  os.flush();
  if (!os) throw std::runtime_error("write_grid_csv: write failed for " + path);
}

}  // namespace netobs
