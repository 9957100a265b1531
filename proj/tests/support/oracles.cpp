#include "support/oracles.hpp"

#include <stdexcept>

namespace netobs::testing {

Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& m, double t, int terms) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= terms; ++k) {
    term = (term * m) * (t / k);
    sum += term;
  }
  return sum;
}

Eigen::MatrixXd simpson_exp_integral(const Eigen::MatrixXd& m, double t, int panels) {
  if (panels < 1) throw std::invalid_argument("simpson_exp_integral: panels must be >= 1");
  const double h = t / (2.0 * panels);
  Eigen::MatrixXd acc = taylor_exp(m, 0.0) + taylor_exp(m, t);
  for (int k = 1; k < 2 * panels; ++k) {
    acc += (k % 2 == 1 ? 4.0 : 2.0) * taylor_exp(m, k * h);
  }
  return acc * (h / 3.0);
}

Eigen::VectorXd rk4_affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& z0, double t, int steps) {
  const double h = t / steps;
  Eigen::VectorXd z = z0;
  for (int s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = a * z + c;
    const Eigen::VectorXd k2 = a * (z + 0.5 * h * k1) + c;
    const Eigen::VectorXd k3 = a * (z + 0.5 * h * k2) + c;
    const Eigen::VectorXd k4 = a * (z + h * k3) + c;
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

std::vector<Eigen::VectorXd> reception_error_recursion(const SynthesisProblem& problem,
                                                       const LiftedDynamics& lifted,
                                                       const GainSchedule& gains,
                                                       const DropoutPlan& plan,
                                                       const Eigen::VectorXd& eps0,
                                                       int num_receptions) {
  std::vector<Eigen::VectorXd> out;
  out.push_back(eps0);
  int stage = 0;
  for (int h = 0; h + 1 < num_receptions; ++h) {
    const int d = plan.counts.at(static_cast<std::size_t>(h));
    out.push_back(closed_loop_matrix(problem, lifted, gains, stage, d) * out.back());
    stage = (stage + 1) % problem.stages();
  }
  return out;
}

Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.next_range(-scale, scale);
  }
  return m;
}

RandomInstance random_instance(std::uint64_t seed) {
  SplitMix64 rng(seed);
  RandomInstance inst;
  const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_below(4));  // 2..5
  const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.next_below(3));  // 1..3
  const Eigen::Index m = static_cast<Eigen::Index>(rng.next_below(3));      // 0..2
  inst.max_dropouts = static_cast<int>(rng.next_below(5));                  // 0..4
  inst.period = rng.next_range(0.02, 0.08);

  inst.plant.A = random_matrix(rng, n, n, 1.5);
  inst.plant.B = random_matrix(rng, n, m, 1.0);
  inst.plant.C = random_matrix(rng, p, n, 1.0);

  inst.gains.mode = ScheduleMode::kRoundRobin;
  inst.gains.gains.resize(static_cast<std::size_t>(p));
  for (Eigen::Index s = 0; s < p; ++s) {
    for (int d = 0; d <= inst.max_dropouts; ++d) {
      inst.gains.gains[static_cast<std::size_t>(s)].push_back(
          random_matrix(rng, n, 1, 2.0));
    }
  }

  inst.x0 = random_matrix(rng, n, 1, 1.0);
  inst.xhat0 = random_matrix(rng, n, 1, 1.0);
  inst.u = m > 0 ? Eigen::VectorXd(random_matrix(rng, m, 1, 1.0)) : Eigen::VectorXd();

  const int gaps = 8;
  inst.plan.max_dropouts = inst.max_dropouts;
  for (int g = 0; g < gaps; ++g) {
    inst.plan.counts.push_back(
        static_cast<int>(rng.next_below(static_cast<std::uint64_t>(inst.max_dropouts) + 1)));
  }
  return inst;
}

}  // namespace netobs::testing
