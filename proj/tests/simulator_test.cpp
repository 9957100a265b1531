#include "netobs/simulator.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netobs/errors.hpp"
#include "netobs/matrix_ops.hpp"
#include "support/oracles.hpp"

namespace netobs {
namespace {

SimulationInputs inputs_from(const testing::RandomInstance& inst) {
  SimulationInputs in;
  in.plant = inst.plant;
  in.gains = inst.gains;
  in.period = inst.period;
  in.x0 = inst.x0;
  in.xhat0 = inst.xhat0;
  in.u = inst.u;
  in.plan = inst.plan;
  int attempts = 0;
  for (int c : inst.plan.counts) attempts += 1 + c;
  in.horizon = attempts * inst.period;
  return in;
}

TEST(LoopPropagation, ExactEstimateStaysExactForever) {
  const testing::RandomInstance inst = testing::random_instance(3);
  SimulationInputs in = inputs_from(inst);
  in.xhat0 = in.x0;
  const SimulationTrace trace = simulate(in);
  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    EXPECT_LE(trace.error_norm(r), 1e-12) << "row " << r;
  }
  for (const ReceptionRecord& rec : trace.receptions) {
    EXPECT_LE(rec.error.norm(), 1e-12);
  }
}

TEST(LoopPropagation, MatchesRungeKuttaIntegration) {
  const testing::RandomInstance inst = testing::random_instance(5);
  const LoopPropagator prop(inst.plant, inst.gains, inst.period);
  Eigen::VectorXd drive = Eigen::VectorXd::Zero(inst.plant.state_dim());
  if (inst.u.size() > 0) drive = inst.plant.B * inst.u;

  LoopState st = prop.initial_state(inst.x0, inst.xhat0);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd v = prop.injection(st);
    const Eigen::VectorXd x_ref =
        testing::rk4_affine(inst.plant.A, drive, st.x, inst.period, 4000);
    const Eigen::VectorXd xhat_ref =
        testing::rk4_affine(inst.plant.A, drive + v, st.x_hat, inst.period, 4000);
    st = prop.propagate_interval(st, inst.u);
    EXPECT_LT((st.x - x_ref).norm() / (1.0 + x_ref.norm()), 1e-9);
    EXPECT_LT((st.x_hat - xhat_ref).norm() / (1.0 + xhat_ref.norm()), 1e-9);
    st = prop.apply_attempt(st, true);
  }
}

TEST(LoopPropagation, SampleWithinAgreesWithCommittedStep) {
  const testing::RandomInstance inst = testing::random_instance(9);
  const LoopPropagator prop(inst.plant, inst.gains, inst.period);
  const LoopState st = prop.initial_state(inst.x0, inst.xhat0);

  const auto [x_now, xhat_now] = prop.sample_within(st, 0.0, inst.u);
  EXPECT_LT((x_now - st.x).norm(), 1e-13);
  EXPECT_LT((xhat_now - st.x_hat).norm(), 1e-13);

  const LoopState next = prop.propagate_interval(st, inst.u);
  const auto [x_end, xhat_end] = prop.sample_within(st, inst.period, inst.u);
  EXPECT_LT((x_end - next.x).norm(), 1e-12);
  EXPECT_LT((xhat_end - next.x_hat).norm(), 1e-12);

  EXPECT_THROW(prop.sample_within(st, 1.5 * inst.period, inst.u), DomainError);
  EXPECT_THROW(prop.sample_within(st, -0.5 * inst.period, inst.u), DomainError);
}

TEST(LoopPropagation, InjectionAppliesScheduledGainToHeldDifference) {
  PlantModel plant;
  plant.A = Eigen::MatrixXd::Zero(2, 2);
  plant.B.resize(2, 0);
  plant.C = Eigen::MatrixXd::Identity(2, 2);

  GainSchedule gains;
  gains.gains.resize(2);
  for (int s = 0; s < 2; ++s) {
    for (int d = 0; d < 2; ++d) {
      gains.gains[s].push_back(Eigen::MatrixXd::Constant(2, 1, 10.0 * s + d + 1.0));
    }
  }
  const LoopPropagator prop(plant, gains, 0.1);

  LoopState st;
  st.t = 0.0;
  st.x = Eigen::VectorXd::Zero(2);
  st.x_hat = Eigen::VectorXd::Zero(2);
  st.held_sample = Eigen::VectorXd::Constant(1, 2.0);
  st.held_estimate = Eigen::VectorXd::Constant(1, 0.5);
  st.scheduler.pi = 2;
  st.scheduler.sigma = 1;
  st.scheduler.num_channels = 2;
  st.scheduler.max_dropouts = 1;

  // Gain row for stage 2, one dropout: constant 12; held difference is 1.5.
  const Eigen::VectorXd v = prop.injection(st);
  EXPECT_NEAR(v(0), 12.0 * 1.5, 1e-15);
  EXPECT_NEAR(v(1), 12.0 * 1.5, 1e-15);
}

TEST(LoopPropagation, ApplyAttemptRequiresGridAlignment) {
  const testing::RandomInstance inst = testing::random_instance(13);
  const LoopPropagator prop(inst.plant, inst.gains, inst.period);
  LoopState st = prop.initial_state(inst.x0, inst.xhat0);
  st.t = 0.4 * inst.period;
  EXPECT_THROW(prop.apply_attempt(st, true), DomainError);
}

// The reception-time error must reproduce the product of per-gap closed loop
// matrices applied to the initial error, for arbitrary gains and inputs. The
// control input cancels in the error exactly.
TEST(SimulateLoop, ReceptionErrorsFollowProductRecursion) {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const testing::RandomInstance inst = testing::random_instance(seed);
    const SimulationInputs in = inputs_from(inst);
    const SimulationTrace trace = simulate(in);

    SynthesisProblem problem;
    problem.plant = inst.plant;
    problem.period = inst.period;
    problem.max_dropouts = inst.max_dropouts;
    problem.lambda = 1.0;
    const LiftedDynamics lifted =
        build_lifted_dynamics(inst.plant, inst.period, inst.max_dropouts);

    const std::vector<Eigen::VectorXd> expected = testing::reception_error_recursion(
        problem, lifted, inst.gains, inst.plan, inst.x0 - inst.xhat0,
        static_cast<int>(trace.receptions.size()));
    ASSERT_EQ(trace.receptions.size(), expected.size()) << "seed " << seed;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      const double rel = (trace.receptions[j].error - expected[j]).norm() /
                         (1.0 + expected[j].norm());
      EXPECT_LT(rel, 1e-9) << "seed " << seed << " reception " << j;
    }
  }
}

TEST(SimulateLoop, CountersMatchHandReplay) {
  PlantModel plant;
  plant.A = Eigen::MatrixXd::Zero(1, 1);
  plant.B.resize(1, 0);
  plant.C = Eigen::MatrixXd::Ones(3, 1);

  GainSchedule gains;
  gains.gains.assign(3, std::vector<Eigen::MatrixXd>(4, Eigen::MatrixXd::Zero(1, 1)));

  SimulationInputs in;
  in.plant = plant;
  in.gains = gains;
  in.period = 1.0;
  in.x0 = Eigen::VectorXd::Ones(1);
  in.xhat0 = Eigen::VectorXd::Zero(1);
  in.plan.max_dropouts = 3;
  in.plan.counts = {1, 0, 2, 0, 3, 1};
  in.horizon = 13.0;
  in.output_grid = 1.0;

  const SimulationTrace trace = simulate(in);
  const std::array<std::pair<int, int>, 14> expected = {{{1, 0},
                                                         {1, 1},
                                                         {2, 0},
                                                         {3, 0},
                                                         {3, 1},
                                                         {3, 2},
                                                         {1, 0},
                                                         {2, 0},
                                                         {2, 1},
                                                         {2, 2},
                                                         {2, 3},
                                                         {3, 0},
                                                         {3, 1},
                                                         {1, 0}}};
  ASSERT_EQ(trace.times.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    EXPECT_DOUBLE_EQ(trace.times[k], static_cast<double>(k));
    EXPECT_EQ(trace.pi[k], expected[k].first) << "instant " << k;
    EXPECT_EQ(trace.sigma[k], expected[k].second) << "instant " << k;
  }

  // Receptions at t = 0, 2, 3, 6, 7, 11, 13 on channels cycling from 1. The
  // first six line up with the per-plan reception times.
  ASSERT_EQ(trace.receptions.size(), 7u);
  const auto events = reception_times(in.plan, in.period, 3, ScheduleMode::kRoundRobin);
  ASSERT_EQ(events.size(), 6u);
  for (std::size_t j = 0; j < events.size(); ++j) {
    EXPECT_NEAR(trace.receptions[j].time, events[j].time, 1e-12);
    EXPECT_EQ(trace.receptions[j].channel, events[j].channel);
  }
  EXPECT_NEAR(trace.receptions.back().time, 13.0, 1e-12);
  EXPECT_EQ(trace.receptions.back().channel, 1);
}

TEST(SimulateLoop, DefaultGridResolutionAndRowTimes) {
  const testing::RandomInstance inst = testing::random_instance(21);
  SimulationInputs in = inputs_from(inst);
  in.horizon = 2.0 * in.period;
  in.output_grid = 0.0;  // defaults to period / 10

  const SimulationTrace trace = simulate(in);
  ASSERT_EQ(trace.times.size(), 21u);
  for (std::size_t r = 1; r < trace.times.size(); ++r) {
    EXPECT_NEAR(trace.times[r] - trace.times[r - 1], in.period / 10.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(trace.times.front(), 0.0);
  EXPECT_NEAR(trace.times.back(), in.horizon, 1e-9 * in.period);
}

TEST(SimulateLoop, TraceAndCsvAreDeterministic) {
  const testing::RandomInstance inst = testing::random_instance(33);
  const SimulationInputs in = inputs_from(inst);

  const SimulationTrace a = simulate(in);
  const SimulationTrace b = simulate(in);
  ASSERT_EQ(a.times.size(), b.times.size());
  EXPECT_EQ((a.x - b.x).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.x_hat - b.x_hat).cwiseAbs().maxCoeff(), 0.0);

  std::ostringstream csv_a;
  std::ostringstream csv_b;
  write_trace_csv(a, csv_a);
  write_trace_csv(b, csv_b);
  EXPECT_EQ(csv_a.str(), csv_b.str());

  const Eigen::Index n = inst.plant.state_dim();
  std::string header = "t";
  for (Eigen::Index j = 0; j < n; ++j) header += ",x" + std::to_string(j + 1);
  for (Eigen::Index j = 0; j < n; ++j) header += ",xhat" + std::to_string(j + 1);
  header += ",eps_norm,pi,sigma";
  const std::string text = csv_a.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), header);

  const std::size_t lines =
      static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(lines, a.times.size() + 1);
}

TEST(SimulateLoop, RejectsShortPlansAndDeepCounts) {
  const testing::RandomInstance inst = testing::random_instance(41);
  SimulationInputs in = inputs_from(inst);

  SimulationInputs exhausted = in;
  exhausted.plan.counts.resize(2);
  EXPECT_THROW(simulate(exhausted), DomainError);

  SimulationInputs too_deep = in;
  too_deep.plan.max_dropouts = inst.max_dropouts + 1;
  too_deep.plan.counts[0] = inst.max_dropouts + 1;
  EXPECT_THROW(simulate(too_deep), DomainError);

  SimulationInputs bad_horizon = in;
  bad_horizon.horizon = 0.0;
  EXPECT_THROW(simulate(bad_horizon), DomainError);
}

// Integrator plant with a single channel: the error weight after elapsed
// time s inside the first interval is 1 - l0 s, so with l0 = 3 / T the worst
// magnitude is 2 at s = T, and it stays there through the second interval
// because the one-dropout gain is zero.
TEST(IntersampleBoundSuite, IntegratorClosedForm) {
  PlantModel plant;
  plant.A = Eigen::MatrixXd::Zero(1, 1);
  plant.B.resize(1, 0);
  plant.C = Eigen::MatrixXd::Ones(1, 1);

  const double period = 0.25;
  GainSchedule gains;
  gains.gains.resize(1);
  gains.gains[0].push_back(Eigen::MatrixXd::Constant(1, 1, 3.0 / period));
  gains.gains[0].push_back(Eigen::MatrixXd::Zero(1, 1));

  const IntersampleBound result = intersample_bound(plant, gains, period);
  EXPECT_NEAR(result.bound, 2.0, 1e-9);
  EXPECT_EQ(result.stage, 0);
  EXPECT_NEAR(result.elapsed, period, 1e-3);
}

TEST(IntersampleBoundSuite, DominatesIdentityAndGapTransitions) {
  const testing::RandomInstance inst = testing::random_instance(17);
  const IntersampleBound result =
      intersample_bound(inst.plant, inst.gains, inst.period);
  EXPECT_GE(result.bound, 1.0 - 1e-9);

  SynthesisProblem problem;
  problem.plant = inst.plant;
  problem.period = inst.period;
  problem.max_dropouts = inst.max_dropouts;
  problem.lambda = 1.0;
  const LiftedDynamics lifted =
      build_lifted_dynamics(inst.plant, inst.period, inst.max_dropouts);
  for (int s = 0; s < problem.stages(); ++s) {
    for (int d = 0; d <= inst.max_dropouts; ++d) {
      const double gap_norm =
          spectral_norm(closed_loop_matrix(problem, lifted, inst.gains, s, d));
      EXPECT_GE(result.bound, gap_norm - 1e-6) << "stage " << s << " gap " << d;
    }
  }
}

}  // namespace
}  // namespace netobs
