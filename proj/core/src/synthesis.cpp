#include "netobs/synthesis.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "netobs/errors.hpp"
#include "netobs/matrix_ops.hpp"

namespace netobs {

namespace {

// Accumulates per-variable coefficients for one block, merging repeated
// variables (the two P groups of a block coincide when the cycle has a
// single stage and the gap lengths match).
class BlockBuilder {
 public:
  explicit BlockBuilder(Eigen::Index dim) : dim_(dim) {}

  Eigen::MatrixXd& coeff(int var) {
    auto [it, fresh] = index_.try_emplace(var, static_cast<int>(terms_.size()));
    if (fresh) terms_.push_back({var, Eigen::MatrixXd::Zero(dim_, dim_)});
    return terms_[static_cast<std::size_t>(it->second)].coeff;
  }

  AffineConstraint finish() {
    AffineConstraint block;
    block.constant = Eigen::MatrixXd::Zero(dim_, dim_);
    block.terms = std::move(terms_);
    return block;
  }

 private:
  Eigen::Index dim_;
  std::vector<AffineTerm> terms_;
  std::unordered_map<int, int> index_;
};

}  // namespace

LiftedDynamics build_lifted_dynamics(const PlantModel& plant, double period,
                                     int max_dropouts) {
  plant.validate();
  if (!(period > 0.0)) throw DomainError("build_lifted_dynamics: period must be positive");
  if (max_dropouts < 0) {
    throw DomainError("build_lifted_dynamics: max_dropouts must be >= 0");
  }
  const Eigen::Index n = plant.state_dim();

  LiftedDynamics out;
  out.hold_integral = exp_integral(plant.A, period);
  out.transition.reserve(static_cast<std::size_t>(max_dropouts) + 1);
  for (int d = 0; d <= max_dropouts; ++d) {
    out.transition.push_back(mat_exp(plant.A, (1.0 + d) * period));
  }
  out.correction.reserve(static_cast<std::size_t>(max_dropouts) + 1);
  for (int d = 0; d <= max_dropouts; ++d) {
    Eigen::MatrixXd row(n, n * (d + 1));
    for (int j = 0; j <= d; ++j) {
      row.middleCols(j * n, n) =
          (j < d) ? (out.hold_integral * out.transition[static_cast<std::size_t>(d - 1 - j)])
                        .eval()
                  : out.hold_integral;
    }
    out.correction.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd SynthesisProblem::stage_output(int s) const {
  if (mode == ScheduleMode::kConcentrated) {
    if (s != 0) throw DimensionError("stage_output: concentrated mode has one stage");
    return plant.C;
  }
  if (s < 0 || s >= plant.output_dim()) {
    throw DimensionError("stage_output: stage " + std::to_string(s) + " outside [0, " +
                         std::to_string(plant.output_dim()) + ")");
  }
  return plant.C.row(s);
}

void SynthesisProblem::validate() const {
  plant.validate();
  if (!(period > 0.0)) throw DomainError("SynthesisProblem: period must be positive");
  if (max_dropouts < 0) throw DomainError("SynthesisProblem: max_dropouts must be >= 0");
  if (!std::isfinite(lambda)) throw DomainError("SynthesisProblem: lambda must be finite");
}

AssembledLmis assemble_lmis(const SynthesisProblem& problem,
                            const LiftedDynamics& lifted) {
  problem.validate();
  if (lifted.max_dropouts() != problem.max_dropouts) {
    throw DimensionError("assemble_lmis: lifted dynamics cover max_dropouts = " +
                         std::to_string(lifted.max_dropouts()) + ", problem needs " +
                         std::to_string(problem.max_dropouts));
  }
  const int n = static_cast<int>(problem.plant.state_dim());
  const int num_stages = problem.stages();
  const int width = problem.innovation_width();
  const int depth = problem.max_dropouts + 1;
  const double lambda = problem.lambda;

  VariableLayout layout{n, num_stages, width, depth};
  ConstraintSystem system;
  system.num_vars = layout.total();
  system.blocks.reserve(static_cast<std::size_t>(num_stages) * depth * depth +
                        static_cast<std::size_t>(num_stages) * depth);

  for (int s = 0; s < num_stages; ++s) {
    const Eigen::MatrixXd c_s = problem.stage_output(s);
    const int s_next = (s + 1) % num_stages;
    for (int d = 0; d < depth; ++d) {
      const Eigen::MatrixXd& a_d = lifted.transition[static_cast<std::size_t>(d)];
      for (int dn = 0; dn < depth; ++dn) {
        BlockBuilder builder(2 * n);

        // -P_s^d in the upper left corner.
        for (int a = 0; a < n; ++a) {
          for (int b = a; b < n; ++b) {
            Eigen::MatrixXd& m = builder.coeff(layout.p_offset(s, d) + layout.sym_index(a, b));
            m(a, b) -= 1.0;
            if (a != b) m(b, a) -= 1.0;
          }
        }
        // +P_{s_next}^{dn} in the lower right corner.
        for (int a = 0; a < n; ++a) {
          for (int b = a; b < n; ++b) {
            Eigen::MatrixXd& m =
                builder.coeff(layout.p_offset(s_next, dn) + layout.sym_index(a, b));
            m(n + a, n + b) += 1.0;
            if (a != b) m(n + b, n + a) += 1.0;
          }
        }
        // X_s^d: He(X A_d) upper left, -X^T + lambda X A_d lower left
        // (mirrored upper right), -lambda He(X) lower right.
        for (int r = 0; r < n; ++r) {
          for (int c = 0; c < n; ++c) {
            Eigen::MatrixXd& m = builder.coeff(layout.x_offset(s, d) + r * n + c);
            for (int j = 0; j < n; ++j) {
              const double arj = a_d(c, j);
              m(r, j) += arj;
              m(j, r) += arj;
              m(n + r, j) += lambda * arj;
              m(j, n + r) += lambda * arj;
            }
            m(n + c, r) -= 1.0;
            m(r, n + c) -= 1.0;
            m(n + r, n + c) -= lambda;
            m(n + c, n + r) -= lambda;
          }
        }
        // G_s^d: -He(G C_s) upper left, -lambda G C_s lower left (mirrored).
        for (int r = 0; r < n; ++r) {
          for (int q = 0; q < width; ++q) {
            Eigen::MatrixXd& m = builder.coeff(layout.g_offset(s, d) + r * width + q);
            for (int j = 0; j < n; ++j) {
              const double cqj = c_s(q, j);
              m(r, j) -= cqj;
              m(j, r) -= cqj;
              m(n + r, j) -= lambda * cqj;
              m(j, n + r) -= lambda * cqj;
            }
          }
        }
        system.blocks.push_back(builder.finish());
      }
    }
  }

  // Positivity of every P_s^d, expressed as -P_s^d < 0.
  for (int s = 0; s < num_stages; ++s) {
    for (int d = 0; d < depth; ++d) {
      BlockBuilder builder(n);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          Eigen::MatrixXd& m = builder.coeff(layout.p_offset(s, d) + layout.sym_index(a, b));
          m(a, b) -= 1.0;
          if (a != b) m(b, a) -= 1.0;
        }
      }
      system.blocks.push_back(builder.finish());
    }
  }

  system.validate();
  return {std::move(system), layout};
}

Certificate extract_certificate(const Eigen::VectorXd& y, const VariableLayout& layout,
                                ScheduleMode mode, double margin) {
  if (y.size() != layout.total()) {
    throw DimensionError("extract_certificate: decision vector has " +
                         std::to_string(y.size()) + " entries, layout needs " +
                         std::to_string(layout.total()));
  }
  const int n = layout.n;
  Certificate cert;
  cert.mode = mode;
  cert.feasibility_margin = margin;
  cert.P.resize(static_cast<std::size_t>(layout.stages));
  cert.X.resize(static_cast<std::size_t>(layout.stages));
  cert.G.resize(static_cast<std::size_t>(layout.stages));
  for (int s = 0; s < layout.stages; ++s) {
    for (int d = 0; d < layout.depth; ++d) {
      Eigen::MatrixXd p(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          const double v = y(layout.p_offset(s, d) + layout.sym_index(a, b));
          p(a, b) = v;
          p(b, a) = v;
        }
      }
      Eigen::MatrixXd x(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) x(r, c) = y(layout.x_offset(s, d) + r * n + c);
      }
      Eigen::MatrixXd g(n, layout.width);
      for (int r = 0; r < n; ++r) {
        for (int q = 0; q < layout.width; ++q) {
          g(r, q) = y(layout.g_offset(s, d) + r * layout.width + q);
        }
      }
      cert.P[static_cast<std::size_t>(s)].push_back(std::move(p));
      cert.X[static_cast<std::size_t>(s)].push_back(std::move(x));
      cert.G[static_cast<std::size_t>(s)].push_back(std::move(g));
    }
  }
  return cert;
}

Eigen::VectorXd pack_certificate(const Certificate& cert, const VariableLayout& layout) {
  if (cert.stages() != layout.stages || cert.depth() != layout.depth) {
    throw DimensionError("pack_certificate: certificate shape does not match layout");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(layout.total());
  const int n = layout.n;
  for (int s = 0; s < layout.stages; ++s) {
    for (int d = 0; d < layout.depth; ++d) {
      const Eigen::MatrixXd& p = cert.P[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
      const Eigen::MatrixXd& x = cert.X[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
      const Eigen::MatrixXd& g = cert.G[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
      if (p.rows() != n || p.cols() != n || x.rows() != n || x.cols() != n ||
          g.rows() != n || g.cols() != layout.width) {
        throw DimensionError("pack_certificate: matrix shape mismatch at stage " +
                             std::to_string(s) + ", gap " + std::to_string(d));
      }
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          y(layout.p_offset(s, d) + layout.sym_index(a, b)) = p(a, b);
        }
      }
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) y(layout.x_offset(s, d) + r * n + c) = x(r, c);
      }
      for (int r = 0; r < n; ++r) {
        for (int q = 0; q < layout.width; ++q) {
          y(layout.g_offset(s, d) + r * layout.width + q) = g(r, q);
        }
      }
    }
  }
  return y;
}

Certificate normalize_certificate(const Certificate& cert) {
  double peak = 0.0;
  for (const auto& table : {std::cref(cert.P), std::cref(cert.X), std::cref(cert.G)}) {
    for (const auto& row : table.get()) {
      for (const Eigen::MatrixXd& m : row) peak = std::max(peak, m.cwiseAbs().maxCoeff());
    }
  }
  if (!(peak > 0.0)) return cert;
  Certificate out = cert;
  out.feasibility_margin = cert.feasibility_margin / peak;
  for (auto* table : {&out.P, &out.X, &out.G}) {
    for (auto& row : *table) {
      for (Eigen::MatrixXd& m : row) m /= peak;
    }
  }
  return out;
}

GainSchedule recover_gains(const Certificate& cert, const LiftedDynamics& lifted,
                           const SynthesisProblem& problem, double cond_limit) {
  problem.validate();
  const int n = static_cast<int>(problem.plant.state_dim());
  const int depth = problem.max_dropouts + 1;
  if (cert.stages() != problem.stages() || cert.depth() != depth) {
    throw DimensionError("recover_gains: certificate shape does not match problem");
  }
  if (lifted.max_dropouts() != problem.max_dropouts) {
    throw DimensionError("recover_gains: lifted dynamics do not match problem");
  }

  GainSchedule schedule;
  schedule.mode = problem.mode;
  schedule.gains.resize(static_cast<std::size_t>(problem.stages()));
  for (int s = 0; s < problem.stages(); ++s) {
    auto& row = schedule.gains[static_cast<std::size_t>(s)];
    row.reserve(static_cast<std::size_t>(depth));
    for (int d = 0; d < depth; ++d) {
      const Eigen::MatrixXd w =
          cert.X[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)] * lifted.hold_integral;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
      const double s_max = svd.singularValues()(0);
      const double s_min = svd.singularValues()(n - 1);
      if (!(s_min > 0.0) || s_max / s_min > cond_limit) {
        throw IllConditionedError(
            "recover_gains: X * hold_integral at stage " + std::to_string(s) + ", gap " +
            std::to_string(d) + " has condition number above " + std::to_string(cond_limit));
      }
      Eigen::MatrixXd l =
          w.partialPivLu().solve(cert.G[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)]);
      for (int j = 0; j < d; ++j) {
        l -= lifted.transition[static_cast<std::size_t>(d - 1 - j)] *
             row[static_cast<std::size_t>(j)];
      }
      row.push_back(std::move(l));
    }
  }
  return schedule;
}

Eigen::MatrixXd stacked_gains(const GainSchedule& gains, int stage, int d) {
  if (stage < 0 || stage >= gains.stages() || d < 0 || d >= gains.depth()) {
    throw DimensionError("stacked_gains: stage or gap index out of range");
  }
  const auto& row = gains.gains[static_cast<std::size_t>(stage)];
  const Eigen::Index n = row.front().rows();
  const Eigen::Index w = row.front().cols();
  Eigen::MatrixXd stack(n * (d + 1), w);
  for (int j = 0; j <= d; ++j) {
    stack.middleRows(j * n, n) = row[static_cast<std::size_t>(j)];
  }
  return stack;
}

Eigen::MatrixXd closed_loop_matrix(const SynthesisProblem& problem,
                                   const LiftedDynamics& lifted,
                                   const GainSchedule& gains, int stage, int d) {
  if (d < 0 || d > problem.max_dropouts) {
    throw DimensionError("closed_loop_matrix: gap length out of range");
  }
  const Eigen::MatrixXd c_s = problem.stage_output(stage);
  return lifted.transition[static_cast<std::size_t>(d)] -
         lifted.correction[static_cast<std::size_t>(d)] * stacked_gains(gains, stage, d) * c_s;
}

VerificationReport verify_certificate(const Certificate& cert,
                                      const LiftedDynamics& lifted,
                                      const GainSchedule& gains,
                                      const SynthesisProblem& problem) {
  const int num_stages = problem.stages();
  const int depth = problem.max_dropouts + 1;
  if (cert.stages() != num_stages || cert.depth() != depth ||
      gains.stages() != num_stages || gains.depth() != depth) {
    throw DimensionError("verify_certificate: table shapes do not match problem");
  }

  VerificationReport report;
  report.min_p_eigenvalue = std::numeric_limits<double>::infinity();
  report.worst_decrease = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < num_stages; ++s) {
    for (int d = 0; d < depth; ++d) {
      const SymmetricMatrix p(cert.P[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)]);
      report.min_p_eigenvalue = std::min(report.min_p_eigenvalue, p.min_eigenvalue());
    }
  }

  for (int s = 0; s < num_stages; ++s) {
    const int s_next = (s + 1) % num_stages;
    for (int d = 0; d < depth; ++d) {
      const Eigen::MatrixXd m = closed_loop_matrix(problem, lifted, gains, s, d);
      const Eigen::MatrixXd& p = cert.P[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
      for (int dn = 0; dn < depth; ++dn) {
        const Eigen::MatrixXd& p_next =
            cert.P[static_cast<std::size_t>(s_next)][static_cast<std::size_t>(dn)];
        Eigen::MatrixXd diff = m.transpose() * p_next * m - p;
        diff = 0.5 * (diff + diff.transpose()).eval();
        const double top = SymmetricMatrix(diff).max_eigenvalue();
        ++report.num_decrease_tests;
        if (top > report.worst_decrease) {
          report.worst_decrease = top;
          report.worst_stage = s;
          report.worst_gap = d;
          report.worst_next_gap = dn;
        }
      }
    }
  }

  report.pass = report.min_p_eigenvalue > 0.0 && report.worst_decrease < 0.0;
  return report;
}

SynthesisOutcome synthesize(const SynthesisProblem& problem,
                            const FeasibilitySolver& solver) {
  SynthesisOutcome outcome;
  outcome.lifted = build_lifted_dynamics(problem.plant, problem.period,
                                         problem.max_dropouts);
  AssembledLmis assembled = assemble_lmis(problem, outcome.lifted);
  outcome.solve = solver.solve(assembled.system);
  if (outcome.solve.status == SolveStatus::kFeasible) {
    Certificate cert = extract_certificate(outcome.solve.y, assembled.layout,
                                           problem.mode, outcome.solve.margin);
    outcome.certificate = normalize_certificate(cert);
    outcome.gains = recover_gains(*outcome.certificate, outcome.lifted, problem);
  }
  return outcome;
}

SynthesisOutcome synthesize(const SynthesisProblem& problem) {
  return synthesize(problem, LogDetBarrierSolver());
}

}  // namespace netobs
