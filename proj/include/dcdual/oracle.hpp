#pragma once

// Small dense reference solvers for the canonical problem. These exist to
// certify the dual bounds in tests and in the CLI's gap report; they favor
// simplicity over speed and refuse problems above kOracleMaxVars variables.
//
//   solve_lp_oracle  revised simplex, Bland's rule, refactorized every pivot
//   solve_qp_oracle  Mehrotra interior point followed by an active-set polish
//
// Both return the constraint multipliers in the sign convention of the
// Lagrangian  f(x) + lambda^T (A x - b) + mu^T (C x - d),  mu >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcdual/canonical.hpp"
#include "dcdual/errors.hpp"

namespace dcdual {

inline constexpr Index kOracleMaxVars = 200;

enum class PrimalStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(PrimalStatus s) {
  switch (s) {
    case PrimalStatus::Optimal: return "Optimal";
    case PrimalStatus::Infeasible: return "Infeasible";
    case PrimalStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct PrimalSolution {
  VectorXd x;               // canonical coordinates
  double objective = 0.0;   // x^T M x + c^T x, before offset
  PrimalStatus status = PrimalStatus::Infeasible;
  VectorXd lambda;          // equality multipliers
  VectorXd mu;              // inequality multipliers, >= 0
  double kkt_residual = 0.0;
};

struct PrimalResidual {
  double ball = 0.0;        // max(0, ||x||_inf - 1)
  double equality = 0.0;    // ||A x - b||_inf
  double inequality = 0.0;  // max(0, max(C x - d))

  double max() const { return std::max({ball, equality, inequality}); }
};

inline PrimalResidual check_primal_feasible(const CanonicalProblem& prob, const VectorXd& x) {
  PrimalResidual r;
  if (x.size() > 0) r.ball = std::max(0.0, x.cwiseAbs().maxCoeff() - 1.0);
  if (prob.num_eq() > 0) r.equality = (prob.eq_matrix * x - prob.eq_rhs).cwiseAbs().maxCoeff();
  if (prob.num_ineq() > 0)
    r.inequality = std::max(0.0, (prob.ineq_matrix * x - prob.ineq_rhs).maxCoeff());
  return r;
}

namespace detail {

/// min cost^T z  s.t.  E z = f, z >= 0  by revised simplex with artificials.
class DenseSimplex {
 public:
  DenseSimplex(MatrixXd e, VectorXd f) : e_(std::move(e)), f_(std::move(f)) {
    rows_ = e_.rows();
    cols_ = e_.cols();
    for (Index i = 0; i < rows_; ++i) {
      if (f_(i) < 0.0) {
        f_(i) = -f_(i);
        e_.row(i) *= -1.0;
        row_sign_.push_back(-1.0);
      } else {
        row_sign_.push_back(1.0);
      }
    }
    // artificial columns form the starting basis
    full_.resize(rows_, cols_ + rows_);
    full_ << e_, MatrixXd::Identity(rows_, rows_);
    basis_.resize(static_cast<std::size_t>(rows_));
    for (Index i = 0; i < rows_; ++i) basis_[static_cast<std::size_t>(i)] = cols_ + i;
  }

  /// Phase 1; false when the constraints are infeasible.
  bool find_feasible() {
    VectorXd cost = VectorXd::Zero(cols_ + rows_);
    cost.tail(rows_).setOnes();
    run(cost, /*allow_artificial=*/true);
    const double infeas = basic_values().dot(basic_costs(cost));
    if (infeas > 1e-9 * (1.0 + f_.lpNorm<Eigen::Infinity>())) return false;
    drive_out_artificials();
    return true;
  }

  /// Phase 2; false when unbounded.
  bool optimize(const VectorXd& cost_z) {
    VectorXd cost = VectorXd::Zero(cols_ + rows_);
    cost.head(cols_) = cost_z;
    return run(cost, /*allow_artificial=*/false);
  }

  VectorXd solution() const {
    VectorXd z = VectorXd::Zero(cols_);
    const VectorXd xb = basic_values();
    for (Index i = 0; i < rows_; ++i) {
      const Index j = basis_[static_cast<std::size_t>(i)];
      if (j < cols_) z(j) = std::max(0.0, xb(i));
    }
    return z;
  }

  /// Multipliers y of the original (unflipped) rows: cost - E^T y >= 0.
  VectorXd row_duals(const VectorXd& cost_z) const {
    VectorXd cost = VectorXd::Zero(cols_ + rows_);
    cost.head(cols_) = cost_z;
    const VectorXd y = basis_matrix().transpose().fullPivLu().solve(basic_costs(cost));
    VectorXd out(rows_);
    for (Index i = 0; i < rows_; ++i) out(i) = row_sign_[static_cast<std::size_t>(i)] * y(i);
    return out;
  }

 private:
  MatrixXd basis_matrix() const {
    MatrixXd b(rows_, rows_);
    for (Index i = 0; i < rows_; ++i) b.col(i) = full_.col(basis_[static_cast<std::size_t>(i)]);
    return b;
  }
  VectorXd basic_costs(const VectorXd& cost) const {
    VectorXd cb(rows_);
    for (Index i = 0; i < rows_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
    return cb;
  }
  VectorXd basic_values() const { return basis_matrix().fullPivLu().solve(f_); }

  bool is_basic(Index j) const {
    return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
  }

  bool run(const VectorXd& cost, bool allow_artificial) {
    const Index limit = 50 * (cols_ + 2 * rows_) + 1000;
    const double cost_scale = 1.0 + cost.lpNorm<Eigen::Infinity>();
    for (Index iter = 0; iter < limit; ++iter) {
      const auto lu = basis_matrix().fullPivLu();
      const VectorXd xb = lu.solve(f_);
      const VectorXd y = lu.transpose().solve(basic_costs(cost));

      // Bland: lowest-index improving column
      Index entering = -1;
      const Index n_candidates = allow_artificial ? cols_ + rows_ : cols_;
      for (Index j = 0; j < n_candidates; ++j) {
        if (is_basic(j)) continue;
        const double reduced = cost(j) - y.dot(full_.col(j));
        if (reduced < -1e-10 * cost_scale) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;

      const VectorXd dir = lu.solve(full_.col(entering));
      Index leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows_; ++i) {
        if (dir(i) <= 1e-11) continue;
        const double ratio = std::max(0.0, xb(i)) / dir(i);
        const bool tie =
            leaving >= 0 && std::abs(ratio - best_ratio) <= 1e-12 * (1.0 + best_ratio);
        if (leaving < 0 || (ratio < best_ratio && !tie)) {
          best_ratio = ratio;
          leaving = i;
        } else if (tie && leaving >= 0 &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)]) {
          leaving = i;
        }
      }
      if (leaving < 0) return false;  // unbounded direction
      basis_[static_cast<std::size_t>(leaving)] = entering;
    }
    throw std::runtime_error("simplex iteration limit reached");
  }

  void drive_out_artificials() {
    for (Index i = 0; i < rows_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < cols_) continue;
      const auto lu = basis_matrix().fullPivLu();
      for (Index j = 0; j < cols_; ++j) {
        if (is_basic(j)) continue;
        const VectorXd dir = lu.solve(full_.col(j));
        if (std::abs(dir(i)) > 1e-9) {
          basis_[static_cast<std::size_t>(i)] = j;
          break;
        }
      }
      // a row with no replacement is redundant; its artificial stays at zero
    }
  }

  MatrixXd e_;
  VectorXd f_;
  MatrixXd full_;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> row_sign_;
  std::vector<Index> basis_;
};

struct StandardForm {
  MatrixXd e;
  VectorXd f;
  VectorXd cost;
};

// u = x + 1 in [0, 2]; columns [u, ineq slacks, upper-bound slacks];
// rows [A u = b + A 1; C u + s = d + C 1; u + w = 2].
inline StandardForm to_standard_form(const CanonicalProblem& prob) {
  const Index n = prob.num_vars(), p = prob.num_eq(), q = prob.num_ineq();
  StandardForm sf;
  sf.e = MatrixXd::Zero(p + q + n, 2 * n + q);
  sf.f.resize(p + q + n);
  const VectorXd ones = VectorXd::Ones(n);
  sf.e.block(0, 0, p, n) = prob.eq_matrix;
  sf.f.head(p) = prob.eq_rhs + prob.eq_matrix * ones;
  sf.e.block(p, 0, q, n) = prob.ineq_matrix;
  sf.e.block(p, n, q, q) = MatrixXd::Identity(q, q);
  sf.f.segment(p, q) = prob.ineq_rhs + prob.ineq_matrix * ones;
  sf.e.block(p + q, 0, n, n) = MatrixXd::Identity(n, n);
  sf.e.block(p + q, n + q, n, n) = MatrixXd::Identity(n, n);
  sf.f.tail(n).setConstant(2.0);
  sf.cost = VectorXd::Zero(2 * n + q);
  sf.cost.head(n) = prob.cost;
  return sf;
}

inline void require_oracle_size(const CanonicalProblem& prob) {
  if (prob.num_vars() > kOracleMaxVars)
    throw PreconditionError("oracle refuses problems with more than " +
                            std::to_string(kOracleMaxVars) + " variables");
}

/// Dual value of the partial Lagrangian (box kept) at the given multipliers;
/// the difference to the primal objective is the duality gap.
inline double partial_dual_value(const CanonicalProblem& prob, const PrimalSolution& sol) {
  VectorXd r = prob.cost + prob.eq_matrix.transpose() * sol.lambda +
               prob.ineq_matrix.transpose() * sol.mu;
  // the quadratic part minimized over the box in closed form, per coordinate
  double value = -prob.eq_rhs.dot(sol.lambda) - prob.ineq_rhs.dot(sol.mu);
  for (Index i = 0; i < r.size(); ++i) {
    const double m = prob.kind == ProblemKind::QP ? prob.m_quad(i) : 0.0;
    // min over |x| <= 1 of m x^2 + r x
    double best = std::min(m + r(i), m - r(i));
    if (m > 0.0) {
      const double xs = -r(i) / (2.0 * m);
      if (std::abs(xs) <= 1.0) best = std::min(best, -r(i) * r(i) / (4.0 * m));
    }
    value += best;
  }
  return value;
}

inline double kkt_residual(const CanonicalProblem& prob, const PrimalSolution& sol) {
  const double gap = std::abs(sol.objective - partial_dual_value(prob, sol));
  const double infeas = check_primal_feasible(prob, sol.x).max();
  const double dual_infeas = sol.mu.size() > 0 ? std::max(0.0, -sol.mu.minCoeff()) : 0.0;
  return std::max({gap, infeas, dual_infeas});
}

inline bool polytope_nonempty(const CanonicalProblem& prob) {
  const StandardForm sf = to_standard_form(prob);
  DenseSimplex simplex(sf.e, sf.f);
  return simplex.find_feasible();
}

}  // namespace detail

inline PrimalSolution solve_lp_oracle(const CanonicalProblem& prob) {
  if (prob.kind != ProblemKind::LP) throw PreconditionError("solve_lp_oracle requires an LP problem");
  detail::require_oracle_size(prob);
  const Index n = prob.num_vars(), p = prob.num_eq(), q = prob.num_ineq();

  const detail::StandardForm sf = detail::to_standard_form(prob);
  detail::DenseSimplex simplex(sf.e, sf.f);
  PrimalSolution sol;
  if (!simplex.find_feasible()) {
    sol.status = PrimalStatus::Infeasible;
    return sol;
  }
  if (!simplex.optimize(sf.cost)) {
    sol.status = PrimalStatus::Unbounded;
    return sol;
  }
  const VectorXd z = simplex.solution();
  sol.status = PrimalStatus::Optimal;
  sol.x = z.head(n) - VectorXd::Ones(n);
  sol.x = sol.x.cwiseMax(-1.0).cwiseMin(1.0);
  sol.objective = prob.cost.dot(sol.x);

  const VectorXd y = simplex.row_duals(sf.cost);
  sol.lambda = -y.head(p);
  sol.mu = (-y.segment(p, q)).cwiseMax(0.0);
  sol.kkt_residual = detail::kkt_residual(prob, sol);
  return sol;
}

struct QpOracleOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;
  bool polish = true;
};

inline PrimalSolution solve_qp_oracle(const CanonicalProblem& prob,
                                      const QpOracleOptions& options = {}) {
  if (prob.kind != ProblemKind::QP) throw PreconditionError("solve_qp_oracle requires a QP problem");
  detail::require_oracle_size(prob);
  if (prob.m_quad.size() > 0 && prob.m_quad.minCoeff() < 0.0)
    throw PreconditionError("quadratic coefficients must be nonnegative");

  PrimalSolution sol;
  if (!detail::polytope_nonempty(prob)) {
    sol.status = PrimalStatus::Infeasible;
    return sol;
  }

  // min 0.5 x^T P x + c^T x  s.t.  A x = b,  G x <= h,  G = [C; I; -I]
  const Index n = prob.num_vars(), p = prob.num_eq(), q = prob.num_ineq();
  const Index m = q + 2 * n;
  const MatrixXd pmat = (2.0 * prob.m_quad).asDiagonal();
  const MatrixXd& a = prob.eq_matrix;
  MatrixXd g(m, n);
  g << prob.ineq_matrix, MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  VectorXd h(m);
  h << prob.ineq_rhs, VectorXd::Ones(2 * n);
  const VectorXd& c = prob.cost;
  const VectorXd& b = prob.eq_rhs;

  VectorXd x = VectorXd::Zero(n), y = VectorXd::Zero(p);
  VectorXd s = (h - g * x).cwiseMax(1.0), z = VectorXd::Ones(m);

  const double scale = 1.0 + std::max({c.lpNorm<Eigen::Infinity>(), h.lpNorm<Eigen::Infinity>(),
                                       b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0});

  auto max_step = [](const VectorXd& v, const VectorXd& dv) {
    double alpha = 1.0;
    for (Index i = 0; i < v.size(); ++i)
      if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    return alpha;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const VectorXd r_dual = pmat * x + c + a.transpose() * y + g.transpose() * z;
    const VectorXd r_prim = a * x - b;
    const VectorXd r_ineq = g * x + s - h;
    const double mu_avg = s.dot(z) / static_cast<double>(m);
    const double res = std::max({r_dual.lpNorm<Eigen::Infinity>(),
                                 r_prim.size() ? r_prim.lpNorm<Eigen::Infinity>() : 0.0,
                                 r_ineq.lpNorm<Eigen::Infinity>()});
    if (res <= options.tolerance * scale && mu_avg <= options.tolerance * scale) break;

    const VectorXd d = z.cwiseQuotient(s);
    MatrixXd kkt = MatrixXd::Zero(n + p, n + p);
    kkt.topLeftCorner(n, n) = pmat + g.transpose() * d.asDiagonal() * g;
    kkt.topRightCorner(n, p) = a.transpose();
    kkt.bottomLeftCorner(p, n) = a;
    const Eigen::FullPivLU<MatrixXd> lu(kkt);

    // complementarity target r_c = s.*z + corr - sigma mu; solves for dx, dy, dz, ds
    auto newton = [&](const VectorXd& r_comp, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                      VectorXd& ds) {
      const VectorXd w = r_ineq - r_comp.cwiseQuotient(z);
      VectorXd rhs(n + p);
      rhs.head(n) = -r_dual - g.transpose() * d.cwiseProduct(w);
      rhs.tail(p) = -r_prim;
      const VectorXd sol_xy = lu.solve(rhs);
      dx = sol_xy.head(n);
      dy = sol_xy.tail(p);
      dz = d.cwiseProduct(g * dx + w);
      ds = (-r_comp - s.cwiseProduct(dz)).cwiseQuotient(z);
    };

    VectorXd dx, dy, dz, ds;
    newton(s.cwiseProduct(z), dx, dy, dz, ds);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu_avg, 3);
    const VectorXd r_comp = s.cwiseProduct(z) + ds.cwiseProduct(dz) -
                            VectorXd::Constant(m, sigma * mu_avg);
    newton(r_comp, dx, dy, dz, ds);
    const double step = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    x += step * dx;
    y += step * dy;
    z += step * dz;
    s += step * ds;
  }

  sol.status = PrimalStatus::Optimal;
  sol.x = x.cwiseMax(-1.0).cwiseMin(1.0);
  sol.lambda = y;
  sol.mu = z.head(q).cwiseMax(0.0);
  sol.objective = prob.objective(sol.x);
  sol.kkt_residual = detail::kkt_residual(prob, sol);

  if (options.polish) {
    // Re-solve the equality-constrained QP on the identified active set.
    std::vector<Index> active;
    for (Index i = 0; i < m; ++i)
      if (s(i) < z(i)) active.push_back(i);
    const auto k = static_cast<Index>(active.size());
    MatrixXd sys = MatrixXd::Zero(n + p + k, n + p + k);
    VectorXd rhs(n + p + k);
    sys.topLeftCorner(n, n) = pmat;
    sys.block(0, n, n, p) = a.transpose();
    sys.block(n, 0, p, n) = a;
    rhs.head(n) = -c;
    rhs.segment(n, p) = b;
    for (Index t = 0; t < k; ++t) {
      sys.block(0, n + p + t, n, 1) = g.row(active[static_cast<std::size_t>(t)]).transpose();
      sys.block(n + p + t, 0, 1, n) = g.row(active[static_cast<std::size_t>(t)]);
      rhs(n + p + t) = h(active[static_cast<std::size_t>(t)]);
    }
    const VectorXd v = sys.completeOrthogonalDecomposition().solve(rhs);
    PrimalSolution polished;
    polished.status = PrimalStatus::Optimal;
    polished.x = v.head(n).cwiseMax(-1.0).cwiseMin(1.0);
    polished.lambda = v.segment(n, p);
    VectorXd zfull = VectorXd::Zero(m);
    bool dual_ok = true;
    for (Index t = 0; t < k; ++t) {
      const double zt = v(n + p + t);
      if (zt < -1e-9 * scale) dual_ok = false;
      zfull(active[static_cast<std::size_t>(t)]) = std::max(0.0, zt);
    }
    polished.mu = zfull.head(q);
    polished.objective = prob.objective(polished.x);
    const double system_error = (sys * v - rhs).lpNorm<Eigen::Infinity>();
    if (dual_ok && system_error <= 1e-9 * scale &&
        check_primal_feasible(prob, polished.x).max() <= 1e-10 * scale) {
      polished.kkt_residual = detail::kkt_residual(prob, polished);
      if (polished.kkt_residual <= sol.kkt_residual) sol = polished;
    }
  }
  return sol;
}

}  // namespace dcdual
