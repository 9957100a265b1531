#include "netobs/sdp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "netobs/errors.hpp"

namespace netobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Working view of the phase-I epigraph problem
//   minimize t  s.t.  F_j(y) - t I < 0,  |y_k| < R,
// whose log barrier at weight mu is
//   mu t - sum_j logdet(t I - F_j(y)) - sum_k log(R - y_k) - log(R + y_k).
class PhaseOne {
 public:
  PhaseOne(const ConstraintSystem& sys, const BarrierOptions& opt)
      : sys_(sys), opt_(opt), m_(sys.num_vars) {}

  // Barrier value at (y, t); +inf outside the barrier domain.
  double value(const Eigen::VectorXd& y, double t, double mu) const {
    double val = mu * t;
    for (const AffineConstraint& block : sys_.blocks) {
      Eigen::MatrixXd s = t * Eigen::MatrixXd::Identity(block.dim(), block.dim()) -
                          block.evaluate(y);
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) return kInf;
      val -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    const double r = opt_.box_radius;
    for (int k = 0; k < m_; ++k) {
      if (std::abs(y(k)) >= r) return kInf;
      val -= std::log(r - y(k)) + std::log(r + y(k));
    }
    return val;
  }

  // Gradient and Hessian of the barrier at an interior (y, t). The decision
  // vector is ordered (y_0 .. y_{m-1}, t). Returns false when some slack
  // matrix fails its Cholesky factorization.
  bool derivatives(const Eigen::VectorXd& y, double t, double mu,
                   Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
    grad->setZero(m_ + 1);
    hess->setZero(m_ + 1, m_ + 1);
    (*grad)(m_) = mu;

    for (const AffineConstraint& block : sys_.blocks) {
      const Eigen::Index d = block.dim();
      Eigen::MatrixXd s =
          t * Eigen::MatrixXd::Identity(d, d) - block.evaluate(y);
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) return false;
      const Eigen::MatrixXd s_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
      const Eigen::MatrixXd s_inv2 = s_inv * s_inv;

      (*grad)(m_) -= s_inv.trace();
      (*hess)(m_, m_) += s_inv2.trace();

      const std::size_t nterms = block.terms.size();
      std::vector<Eigen::MatrixXd> sandwiched(nterms);
      for (std::size_t a = 0; a < nterms; ++a) {
        const AffineTerm& ta = block.terms[a];
        (*grad)(ta.var) += s_inv.cwiseProduct(ta.coeff).sum();
        const double cross = -s_inv2.cwiseProduct(ta.coeff).sum();
        (*hess)(m_, ta.var) += cross;
        (*hess)(ta.var, m_) += cross;
        sandwiched[a] = s_inv * ta.coeff * s_inv;
      }
      for (std::size_t a = 0; a < nterms; ++a) {
        const int va = block.terms[a].var;
        for (std::size_t b = a; b < nterms; ++b) {
          const int vb = block.terms[b].var;
          const double h = sandwiched[a].cwiseProduct(block.terms[b].coeff).sum();
          (*hess)(va, vb) += h;
          if (va != vb) (*hess)(vb, va) += h;
        }
      }
    }

    const double r = opt_.box_radius;
    for (int k = 0; k < m_; ++k) {
      const double dm = r - y(k);
      const double dp = r + y(k);
      (*grad)(k) += 1.0 / dm - 1.0 / dp;
      (*hess)(k, k) += 1.0 / (dm * dm) + 1.0 / (dp * dp);
    }
    return true;
  }

 private:
  const ConstraintSystem& sys_;
  const BarrierOptions& opt_;
  int m_;
};

// Solves H d = -g with Jacobi equilibration; the raw Hessian mixes barrier
// curvatures many orders of magnitude apart once mu gets large. *accurate is
// set when the scaled residual is small enough that the Newton decrement can
// be trusted for duality-gap reasoning.
bool newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad,
                      Eigen::VectorXd* dir, bool* accurate) {
  const Eigen::Index n = hess.rows();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = hess(i, i);
    scale(i) = (h > 0.0 && std::isfinite(h)) ? 1.0 / std::sqrt(h) : 1.0;
  }
  Eigen::MatrixXd hs = scale.asDiagonal() * hess * scale.asDiagonal();
  const Eigen::VectorXd gs = scale.asDiagonal() * grad;

  for (double reg = 0.0; reg <= 1e-6; reg = (reg == 0.0) ? 1e-12 : reg * 100.0) {
    Eigen::MatrixXd h_try = hs;
    if (reg > 0.0) h_try.diagonal().array() += reg;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h_try);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd u = ldlt.solve(-gs);
      if (u.allFinite()) {
        const double res = (hs * u + gs).cwiseAbs().maxCoeff();
        *accurate = res <= 1e-6 * (1.0 + gs.cwiseAbs().maxCoeff());
        *dir = scale.asDiagonal() * u;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

SolveResult LogDetBarrierSolver::solve(const ConstraintSystem& system) const {
  system.validate();
  const int m = system.num_vars;
  const BarrierOptions& opt = options_;
  PhaseOne phase(system, opt);

  SolveResult result;
  result.y = Eigen::VectorXd::Zero(m);

  // Total barrier parameter: one unit per semidefinite cone dimension plus
  // one per scalar box face. It converts barrier weight into a bound on how
  // far the current slack level can sit above the optimum.
  double nu = 2.0 * m;
  for (const AffineConstraint& block : system.blocks) nu += block.dim();

  // Start at the box center with enough slack to dominate every block.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  double t = system.max_eigenvalue(y) + 1.0;

  const double margin0 = system.margin(y);
  if (margin0 >= opt.target_margin) {
    result.status = SolveStatus::kFeasible;
    result.margin = margin0;
    result.t_final = -margin0;
    result.detail = "feasible at the box center";
    return result;
  }

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd dir;
  double mu = opt.mu_initial;
  bool have_bound = false;

  auto try_accept_feasible = [&](SolveResult* out) {
    const double margin = system.margin(y);
    if (margin >= opt.target_margin) {
      out->status = SolveStatus::kFeasible;
      out->y = y;
      out->margin = margin;
      out->t_final = t;
      return true;
    }
    return false;
  };

  for (int stage = 0; stage < opt.max_barrier_stages; ++stage) {
    result.barrier_stages = stage + 1;
    bool centered = false;

    for (int it = 0; it < opt.max_newton_per_stage; ++it) {
      if (!phase.derivatives(y, t, mu, &grad, &hess)) {
        result.detail = "slack factorization failed off the central path";
        result.y = y;
        result.margin = system.margin(y);
        result.t_final = t;
        return result;
      }
      bool accurate = false;
      if (!newton_direction(hess, grad, &dir, &accurate)) {
        result.detail = "newton system unsolvable at stage " + std::to_string(stage);
        result.y = y;
        result.margin = system.margin(y);
        result.t_final = t;
        return result;
      }
      const double decrement2 = std::max(0.0, -grad.dot(dir));
      if (decrement2 <= opt.center_tol) {
        centered = accurate;
        break;
      }

      const double base = phase.value(y, t, mu);
      double step = 1.0;
      bool moved = false;
      while (step >= 1e-14) {
        const Eigen::VectorXd y_new = y + step * dir.head(m);
        const double t_new = t + step * dir(m);
        const double val = phase.value(y_new, t_new, mu);
        if (val <= base - 0.01 * step * decrement2) {
          y = y_new;
          t = t_new;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++result.newton_steps;
      if (!moved) break;

      if (t <= -opt.target_margin && try_accept_feasible(&result)) return result;
    }

    if (t <= -opt.target_margin && try_accept_feasible(&result)) return result;

    if (centered) {
      // From a point with Newton decrement <= 0.1 the slack level can exceed
      // the optimum by at most about nu/mu; 2 nu/mu absorbs the slop.
      const double lower = t - 2.0 * nu / mu;
      result.lower_bound = lower;
      have_bound = true;
      if (lower > -opt.target_margin) {
        result.status = SolveStatus::kInfeasible;
        result.y = y;
        result.margin = system.margin(y);
        result.t_final = t;
        return result;
      }
    }

    mu *= opt.mu_factor;
  }

  result.status = SolveStatus::kUndecided;
  result.y = y;
  result.margin = system.margin(y);
  result.t_final = t;
  result.detail = have_bound ? "stage budget exhausted"
                             : "stage budget exhausted before any centered stage";
  return result;
}

SolveResult solve_feasibility(const ConstraintSystem& system) {
  return LogDetBarrierSolver().solve(system);
}

}  // namespace netobs
