#include "netobs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "netobs/errors.hpp"
#include "netobs/matrix_ops.hpp"

namespace netobs {

namespace {

// exp of the augmented block [[A, I], [0, 0]] * t yields both the state
// transition and the input hold integral in one call.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hold_discretization(const Eigen::MatrixXd& a,
                                                                double t) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd e = mat_exp(block, t);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

void check_gains_match(const PlantModel& plant, const GainSchedule& gains) {
  const int expected_stages =
      gains.mode == ScheduleMode::kRoundRobin ? static_cast<int>(plant.output_dim()) : 1;
  const int expected_width =
      gains.mode == ScheduleMode::kRoundRobin ? 1 : static_cast<int>(plant.output_dim());
  if (gains.stages() != expected_stages) {
    throw DimensionError("gain schedule has " + std::to_string(gains.stages()) +
                         " stages, plant and mode need " + std::to_string(expected_stages));
  }
  if (gains.depth() < 1) throw DimensionError("gain schedule is empty");
  for (const auto& row : gains.gains) {
    if (static_cast<int>(row.size()) != gains.depth()) {
      throw DimensionError("gain schedule rows have uneven depth");
    }
    for (const Eigen::MatrixXd& l : row) {
      if (l.rows() != plant.state_dim() || l.cols() != expected_width) {
        throw DimensionError("gain matrix must be " + std::to_string(plant.state_dim()) +
                             "x" + std::to_string(expected_width));
      }
    }
  }
}

void append_double(std::string* line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  *line += buf;
}

}  // namespace

LoopPropagator::LoopPropagator(PlantModel plant, GainSchedule gains, double period)
    : plant_(std::move(plant)), gains_(std::move(gains)), period_(period) {
  plant_.validate();
  if (!(period_ > 0.0)) throw DomainError("LoopPropagator: period must be positive");
  check_gains_match(plant_, gains_);
  std::tie(full_step_, full_hold_) = hold_discretization(plant_.A, period_);
}

Eigen::MatrixXd LoopPropagator::stage_rows(int pi) const {
  if (gains_.mode == ScheduleMode::kConcentrated) return plant_.C;
  return plant_.output_row(pi);
}

const std::pair<Eigen::MatrixXd, Eigen::MatrixXd>& LoopPropagator::discretization(
    double offset) const {
  auto it = offset_cache_.find(offset);
  if (it == offset_cache_.end()) {
    if (offset_cache_.size() > 65536) offset_cache_.clear();
    it = offset_cache_.emplace(offset, hold_discretization(plant_.A, offset)).first;
  }
  return it->second;
}

LoopState LoopPropagator::initial_state(const Eigen::VectorXd& x0,
                                        const Eigen::VectorXd& xhat0) const {
  if (x0.size() != plant_.state_dim() || xhat0.size() != plant_.state_dim()) {
    throw DimensionError("initial_state: x0 and xhat0 must have the state dimension");
  }
  LoopState st;
  st.t = 0.0;
  st.x = x0;
  st.x_hat = xhat0;
  st.scheduler.pi = 1;
  st.scheduler.sigma = 0;
  st.scheduler.num_channels = static_cast<int>(plant_.output_dim());
  st.scheduler.max_dropouts = gains_.depth() - 1;
  st.scheduler.mode = gains_.mode;
  const Eigen::MatrixXd rows = stage_rows(1);
  st.held_sample = rows * x0;
  st.held_estimate = rows * xhat0;
  return st;
}

Eigen::VectorXd LoopPropagator::injection(const LoopState& state) const {
  const int stage =
      gains_.mode == ScheduleMode::kRoundRobin ? state.scheduler.pi - 1 : 0;
  const int sigma = state.scheduler.sigma;
  if (stage < 0 || stage >= gains_.stages() || sigma < 0 || sigma >= gains_.depth()) {
    throw DomainError("injection: no gain for pi = " + std::to_string(state.scheduler.pi) +
                      ", sigma = " + std::to_string(sigma));
  }
  return gains_.gains[static_cast<std::size_t>(stage)][static_cast<std::size_t>(sigma)] *
         (state.held_sample - state.held_estimate);
}

LoopState LoopPropagator::propagate_interval(const LoopState& state,
                                             const Eigen::VectorXd& u) const {
  Eigen::VectorXd drive = Eigen::VectorXd::Zero(plant_.state_dim());
  if (u.size() > 0) {
    if (u.size() != plant_.input_dim()) {
      throw DimensionError("propagate_interval: u must match the input dimension");
    }
    drive = plant_.B * u;
  }
  const Eigen::VectorXd v = injection(state);
  LoopState next = state;
  next.t = state.t + period_;
  next.x = full_step_ * state.x + full_hold_ * drive;
  next.x_hat = full_step_ * state.x_hat + full_hold_ * (drive + v);
  return next;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LoopPropagator::sample_within(
    const LoopState& state, double offset, const Eigen::VectorXd& u) const {
  const double fuzz = 1e-9 * period_;
  if (offset < -fuzz || offset > period_ + fuzz) {
    throw DomainError("sample_within: offset outside [0, period]");
  }
  offset = std::clamp(offset, 0.0, period_);
  Eigen::VectorXd drive = Eigen::VectorXd::Zero(plant_.state_dim());
  if (u.size() > 0) {
    if (u.size() != plant_.input_dim()) {
      throw DimensionError("sample_within: u must match the input dimension");
    }
    drive = plant_.B * u;
  }
  const auto& [step_m, hold_m] = discretization(offset);
  const Eigen::VectorXd v = injection(state);
  return {step_m * state.x + hold_m * drive,
          step_m * state.x_hat + hold_m * (drive + v)};
}

LoopState LoopPropagator::apply_attempt(const LoopState& state, bool received) const {
  const double k = std::round(state.t / period_);
  if (std::abs(state.t - k * period_) > 1e-6 * period_) {
    throw DomainError("apply_attempt: t = " + std::to_string(state.t) +
                      " is not a sampling instant");
  }
  LoopState next = state;
  next.scheduler = step(state.scheduler, received);
  if (received) {
    const Eigen::MatrixXd rows = stage_rows(next.scheduler.pi);
    next.held_sample = rows * state.x;
    next.held_estimate = rows * state.x_hat;
  }
  return next;
}

SimulationTrace simulate(const SimulationInputs& in) {
  in.plant.validate();
  in.plan.validate();
  if (!(in.period > 0.0)) throw DomainError("simulate: period must be positive");
  if (!(in.horizon > 0.0)) throw DomainError("simulate: horizon must be positive");
  const double grid = in.output_grid > 0.0 ? in.output_grid : in.period / 10.0;
  if (!(grid > 0.0)) throw DomainError("simulate: output grid must be positive");
  for (int c : in.plan.counts) {
    if (c > in.gains.depth() - 1) {
      throw DomainError("simulate: plan entry " + std::to_string(c) +
                        " exceeds the gain table depth " + std::to_string(in.gains.depth()));
    }
  }

  LoopPropagator prop(in.plant, in.gains, in.period);
  const Eigen::Index n = in.plant.state_dim();
  LoopState st = prop.initial_state(in.x0, in.xhat0);

  SimulationTrace trace;
  trace.period = in.period;
  trace.plan = in.plan;
  trace.receptions.push_back(
      {0.0, st.scheduler.pi, st.held_sample, Eigen::VectorXd(in.x0 - in.xhat0)});

  const std::size_t num_rows =
      static_cast<std::size_t>(std::floor(in.horizon / grid + 1e-9)) + 1;
  trace.times.resize(num_rows);
  for (std::size_t r = 0; r < num_rows; ++r) trace.times[r] = static_cast<double>(r) * grid;
  trace.x.resize(static_cast<Eigen::Index>(num_rows), n);
  trace.x_hat.resize(static_cast<Eigen::Index>(num_rows), n);
  trace.pi.resize(num_rows);
  trace.sigma.resize(num_rows);

  const double fuzz = 1e-9 * in.period;
  std::size_t next_row = 0;
  auto flush_rows_before = [&](double window_end) {
    while (next_row < num_rows && trace.times[next_row] < window_end - fuzz) {
      const auto [x, x_hat] = prop.sample_within(st, trace.times[next_row] - st.t, in.u);
      trace.x.row(static_cast<Eigen::Index>(next_row)) = x;
      trace.x_hat.row(static_cast<Eigen::Index>(next_row)) = x_hat;
      trace.pi[next_row] = st.scheduler.pi;
      trace.sigma[next_row] = st.scheduler.sigma;
      ++next_row;
    }
  };

  const long num_instants = static_cast<long>(std::floor(in.horizon / in.period + 1e-9));
  std::size_t gap_index = 0;
  int run = 0;
  for (long k = 1; k <= num_instants; ++k) {
    flush_rows_before(static_cast<double>(k) * in.period);
    st = prop.propagate_interval(st, in.u);
    if (gap_index >= in.plan.counts.size()) {
      throw DomainError("simulate: dropout plan exhausted at t = " + std::to_string(st.t));
    }
    const bool received = run == in.plan.counts[gap_index];
    st = prop.apply_attempt(st, received);
    if (received) {
      trace.receptions.push_back({st.t, st.scheduler.pi, st.held_sample,
                                  Eigen::VectorXd(st.x - st.x_hat)});
      ++gap_index;
      run = 0;
    } else {
      ++run;
    }
  }
  flush_rows_before(in.horizon + 2.0 * fuzz);

  return trace;
}

void write_trace_csv(const SimulationTrace& trace, std::ostream& os) {
  const Eigen::Index n = trace.x.cols();
  std::string line = "t";
  for (Eigen::Index j = 0; j < n; ++j) line += ",x" + std::to_string(j + 1);
  for (Eigen::Index j = 0; j < n; ++j) line += ",xhat" + std::to_string(j + 1);
  line += ",eps_norm,pi,sigma\n";
  os << line;
  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    line.clear();
    append_double(&line, trace.times[r]);
    for (Eigen::Index j = 0; j < n; ++j) {
      line += ',';
      append_double(&line, trace.x(static_cast<Eigen::Index>(r), j));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      line += ',';
      append_double(&line, trace.x_hat(static_cast<Eigen::Index>(r), j));
    }
    line += ',';
    append_double(&line, trace.error_norm(r));
    line += ',' + std::to_string(trace.pi[r]) + ',' + std::to_string(trace.sigma[r]) + '\n';
    os << line;
  }
}

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  write_trace_csv(trace, os);
  os.flush();
  if (!os) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

IntersampleBound intersample_bound(const PlantModel& plant, const GainSchedule& gains,
                                   double period) {
  plant.validate();
  if (!(period > 0.0)) throw DomainError("intersample_bound: period must be positive");
  check_gains_match(plant, gains);

  constexpr int kGridPerInterval = 2000;
  const Eigen::Index n = plant.state_dim();
  const int depth = gains.depth();

  std::vector<Eigen::MatrixXd> step_at(kGridPerInterval + 1), hold_at(kGridPerInterval + 1);
  for (int j = 0; j <= kGridPerInterval; ++j) {
    std::tie(step_at[j], hold_at[j]) =
        hold_discretization(plant.A, period * j / kGridPerInterval);
  }

  IntersampleBound best;
  int best_interval = 0;
  for (int s = 0; s < gains.stages(); ++s) {
    const Eigen::MatrixXd c_s =
        gains.mode == ScheduleMode::kRoundRobin ? Eigen::MatrixXd(plant.C.row(s)) : plant.C;
    Eigen::MatrixXd m_start = Eigen::MatrixXd::Identity(n, n);
    for (int m = 0; m < depth; ++m) {
      const Eigen::MatrixXd k_m =
          gains.gains[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] * c_s;
      for (int j = 0; j <= kGridPerInterval; ++j) {
        const double norm = spectral_norm(step_at[j] * m_start - hold_at[j] * k_m);
        if (norm > best.bound) {
          best.bound = norm;
          best.stage = s;
          best.elapsed = m * period + period * j / kGridPerInterval;
          best_interval = m;
        }
      }
      m_start = step_at[kGridPerInterval] * m_start - hold_at[kGridPerInterval] * k_m;
    }
  }

  // Sharpen around the grid argmax with golden section search on the norm as
  // a function of elapsed time within the attaining interval.
  {
    const int s = best.stage;
    const int m = best_interval;
    const Eigen::MatrixXd c_s =
        gains.mode == ScheduleMode::kRoundRobin ? Eigen::MatrixXd(plant.C.row(s)) : plant.C;
    Eigen::MatrixXd m_start = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < m; ++i) {
      const Eigen::MatrixXd k_i =
          gains.gains[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] * c_s;
      m_start = step_at[kGridPerInterval] * m_start - hold_at[kGridPerInterval] * k_i;
    }
    const Eigen::MatrixXd k_m =
        gains.gains[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] * c_s;
    auto norm_at = [&](double offset) {
      const auto [e, g] = hold_discretization(plant.A, offset);
      return spectral_norm(e * m_start - g * k_m);
    };

    const double delta = period / kGridPerInterval;
    const double offset_best = best.elapsed - m * period;
    double lo = std::max(0.0, offset_best - delta);
    double hi = std::min(period, offset_best + delta);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - ratio * (hi - lo);
    double d = lo + ratio * (hi - lo);
    double fc = norm_at(c);
    double fd = norm_at(d);
    for (int it = 0; it < 48; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - ratio * (hi - lo);
        fc = norm_at(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + ratio * (hi - lo);
        fd = norm_at(d);
      }
    }
    const double offset_ref = 0.5 * (lo + hi);
    const double refined = norm_at(offset_ref);
    if (refined > best.bound) {
      best.bound = refined;
      best.elapsed = m * period + offset_ref;
    }
  }

  return best;
}

}  // namespace netobs
