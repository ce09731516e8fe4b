#pragma once

// Closed-form Lagrange dual of the canonical problem and its supergradients.
//
// Minimizing the Lagrangian over the unit infinity-ball is a dual-norm
// evaluation, min_{|x|<=1} r^T x = -||r||_1, which gives
//
//   LP:  g(lambda, mu)    = -||c + A^T lambda + C^T mu||_1 - lambda^T b - mu^T d
//   QP:  g(lambda, mu, s) = -||c + A^T lambda + C^T mu - sqrt(M) s||_1
//                           - 0.25 s^T s - lambda^T b - mu^T d
//
// The QP form comes from x_i^2 M_i >= sqrt(M_i) x_i s_i - s_i^2 / 4, tight at
// s_i = 2 sqrt(M_i) x_i, so s is unconstrained and no cone projection is
// needed. Any mu >= 0 (and any lambda, s) gives a valid lower bound.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "dcdual/canonical.hpp"
#include "dcdual/errors.hpp"

namespace dcdual {

/// Dual variables stored contiguously as [lambda; mu; s].
struct DualIterate {
  VectorXd values;
  Index n_eq = 0;
  Index n_ineq = 0;
  Index n_s = 0;

  static DualIterate zeros(const CanonicalProblem& prob) {
    DualIterate it;
    it.n_eq = prob.num_eq();
    it.n_ineq = prob.num_ineq();
    it.n_s = prob.kind == ProblemKind::QP ? prob.num_vars() : 0;
    it.values = VectorXd::Zero(it.n_eq + it.n_ineq + it.n_s);
    return it;
  }

  auto lambda() { return values.segment(0, n_eq); }
  auto lambda() const { return values.segment(0, n_eq); }
  auto mu() { return values.segment(n_eq, n_ineq); }
  auto mu() const { return values.segment(n_eq, n_ineq); }
  auto s() { return values.segment(n_eq + n_ineq, n_s); }
  auto s() const { return values.segment(n_eq + n_ineq, n_s); }
};

struct DualEvaluation {
  double objective = 0.0;  // before offset
  VectorXd residual;       // argument of the 1-norm
  VectorXd gradient;       // [grad_lambda; grad_mu; grad_s]
  Index n_eq = 0;
  Index n_ineq = 0;
  Index n_s = 0;

  auto grad_lambda() const { return gradient.segment(0, n_eq); }
  auto grad_mu() const { return gradient.segment(n_eq, n_ineq); }
  auto grad_s() const { return gradient.segment(n_eq + n_ineq, n_s); }
};

struct KernelOptions {
  /// Update C * sign(r) from the columns whose sign changed instead of a full
  /// product. Only used on problems with at least `incremental_min_entries`
  /// matrix entries.
  bool incremental_gradient = true;
  Index incremental_min_entries = Index{1} << 16;
  int refresh_interval = 64;
};

/// Evaluates the dual objective and a supergradient in one pass over the
/// residual. Holds scratch storage so repeated evaluation does not allocate.
class DualKernel {
 public:
  explicit DualKernel(const CanonicalProblem& prob, KernelOptions options = {})
      : prob_(prob), options_(options) {
    const Index n = prob.num_vars();
    if (prob.eq_matrix.rows() != prob.num_eq() || prob.eq_matrix.cols() != n ||
        prob.ineq_matrix.rows() != prob.num_ineq() || prob.ineq_matrix.cols() != n ||
        prob.m_quad.size() != n)
      throw PreconditionError("canonical problem has inconsistent dimensions");
    if (prob.kind == ProblemKind::QP && n > 0 && !(prob.m_quad.minCoeff() >= 0.0))
      throw PreconditionError("quadratic coefficients must be nonnegative");
    sqrt_m_ = prob.m_quad.cwiseMax(0.0).cwiseSqrt();
    sign_.setZero(n);
    ineq_sign_product_.setZero(prob.num_ineq());
    const Index q = prob.num_ineq();
    half_ = q % 2 == 0 && q > 0 && prob.ineq_matrix.bottomRows(q / 2) == -prob.ineq_matrix.topRows(q / 2)
                ? q / 2
                : 0;
    const Index stored = half_ > 0 ? half_ : q;
    incremental_ = options_.incremental_gradient && stored * n >= options_.incremental_min_entries;
    if (incremental_) ineq_cols_ = prob.ineq_matrix.topRows(stored);
  }

  const CanonicalProblem& problem() const { return prob_; }

  void prepare(DualEvaluation& out) const {
    out.n_eq = prob_.num_eq();
    out.n_ineq = prob_.num_ineq();
    out.n_s = prob_.kind == ProblemKind::QP ? prob_.num_vars() : 0;
    out.residual.resize(prob_.num_vars());
    out.gradient.resize(out.n_eq + out.n_ineq + out.n_s);
  }

  /// Full evaluation. `reuse_sign_product` allows the incremental update of
  /// C * sign(r) against the previous call on this kernel.
  void evaluate(const DualIterate& it, DualEvaluation& out, bool reuse_sign_product = false) {
    check(it);
    if (out.gradient.size() != it.values.size() || out.residual.size() != prob_.num_vars())
      prepare(out);
    compute_residual(it, out.residual);

    const auto lambda = it.lambda();
    const auto mu = it.mu();
    double objective = -out.residual.lpNorm<1>() - lambda.dot(prob_.eq_rhs) - mu.dot(prob_.ineq_rhs);
    if (prob_.kind == ProblemKind::QP) objective -= 0.25 * it.s().squaredNorm();
    out.objective = objective;

    // sign(0) = 0
    const VectorXd& r = out.residual;
    if (reuse_sign_product && incremental_ && has_sign_product_ &&
        evaluations_since_refresh_ < options_.refresh_interval) {
      Index flips = 0;
      for (Index i = 0; i < r.size(); ++i)
        if (sign_of(r(i)) != sign_(i)) ++flips;
      if (2 * flips <= r.size()) {
        for (Index i = 0; i < r.size(); ++i) {
          const double next = sign_of(r(i));
          if (next != sign_(i)) {
            ineq_sign_product_.head(ineq_cols_.rows()).noalias() +=
                (next - sign_(i)) * ineq_cols_.col(i);
            sign_(i) = next;
          }
        }
        if (half_ > 0) ineq_sign_product_.tail(half_) = -ineq_sign_product_.head(half_);
        ++evaluations_since_refresh_;
      } else {
        full_sign_product(r);
      }
    } else {
      full_sign_product(r);
    }

    auto grad = out.gradient.segment(0, out.n_eq);
    grad.noalias() = -(prob_.eq_matrix * sign_);
    grad -= prob_.eq_rhs;
    out.gradient.segment(out.n_eq, out.n_ineq) = -ineq_sign_product_ - prob_.ineq_rhs;
    if (out.n_s > 0)
      out.gradient.segment(out.n_eq + out.n_ineq, out.n_s) =
          sqrt_m_.cwiseProduct(sign_) - 0.5 * it.s();
  }

  /// Objective only; the residual is written to `residual`.
  double objective(const DualIterate& it, VectorXd& residual) const {
    check(it);
    residual.resize(prob_.num_vars());
    compute_residual(it, residual);
    double value = -residual.lpNorm<1>() - it.lambda().dot(prob_.eq_rhs) -
                   it.mu().dot(prob_.ineq_rhs);
    if (prob_.kind == ProblemKind::QP) value -= 0.25 * it.s().squaredNorm();
    return value;
  }

 private:
  static double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

  void check(const DualIterate& it) const {
    const Index n_s = prob_.kind == ProblemKind::QP ? prob_.num_vars() : 0;
    if (it.n_eq != prob_.num_eq() || it.n_ineq != prob_.num_ineq() || it.n_s != n_s ||
        it.values.size() != it.n_eq + it.n_ineq + it.n_s)
      throw PreconditionError("dual iterate dimensions do not match the problem");
    const auto mu = it.mu();
    for (Index j = 0; j < mu.size(); ++j)
      if (!(mu(j) >= 0.0))
        throw PreconditionError("mu has a negative entry at " + std::to_string(j) +
                                "; project the iterate first");
  }

  // r = c + A^T lambda + C^T mu - sqrt(M) s, accumulated row by row; rows
  // with a zero multiplier contribute nothing and are skipped.
  void compute_residual(const DualIterate& it, VectorXd& r) const {
    r = prob_.cost;
    const auto lambda = it.lambda();
    for (Index k = 0; k < lambda.size(); ++k)
      if (lambda(k) != 0.0) r.noalias() += lambda(k) * prob_.eq_matrix.row(k).transpose();
    const auto mu = it.mu();
    if (half_ > 0) {
      // rows come in +/- pairs, so C^T mu = H^T (mu_top - mu_bottom)
      for (Index j = 0; j < half_; ++j) {
        const double w = mu(j) - mu(j + half_);
        if (w != 0.0) r.noalias() += w * prob_.ineq_matrix.row(j).transpose();
      }
    } else {
      for (Index j = 0; j < mu.size(); ++j)
        if (mu(j) != 0.0) r.noalias() += mu(j) * prob_.ineq_matrix.row(j).transpose();
    }
    if (prob_.kind == ProblemKind::QP) r -= sqrt_m_.cwiseProduct(it.s());
  }

  void full_sign_product(const VectorXd& r) {
    for (Index i = 0; i < r.size(); ++i) sign_(i) = sign_of(r(i));
    if (half_ > 0) {
      ineq_sign_product_.head(half_).noalias() = prob_.ineq_matrix.topRows(half_) * sign_;
      ineq_sign_product_.tail(half_) = -ineq_sign_product_.head(half_);
    } else {
      ineq_sign_product_.noalias() = prob_.ineq_matrix * sign_;
    }
    has_sign_product_ = true;
    evaluations_since_refresh_ = 0;
  }

  const CanonicalProblem& prob_;
  KernelOptions options_;
  VectorXd sqrt_m_;
  VectorXd sign_;
  VectorXd ineq_sign_product_;
  MatrixXd ineq_cols_;  // column-major copy of C (or its top half) for the incremental update
  Index half_ = 0;      // nonzero when the bottom half of C is the negated top half
  bool incremental_ = false;
  bool has_sign_product_ = false;
  int evaluations_since_refresh_ = 0;
};

inline DualEvaluation eval_dual_lp(const CanonicalProblem& prob, const DualIterate& it) {
  if (prob.kind != ProblemKind::LP) throw PreconditionError("eval_dual_lp requires an LP problem");
  DualKernel kernel(prob);
  DualEvaluation out;
  kernel.evaluate(it, out);
  return out;
}

inline DualEvaluation eval_dual_qp(const CanonicalProblem& prob, const DualIterate& it) {
  if (prob.kind != ProblemKind::QP) throw PreconditionError("eval_dual_qp requires a QP problem");
  DualKernel kernel(prob);
  DualEvaluation out;
  kernel.evaluate(it, out);
  return out;
}

inline DualEvaluation eval_dual(const CanonicalProblem& prob, const DualIterate& it) {
  return prob.kind == ProblemKind::LP ? eval_dual_lp(prob, it) : eval_dual_qp(prob, it);
}

/// mu <- max(mu, 0); lambda and s are free.
inline DualIterate project_feasible(DualIterate it) {
  it.mu() = it.mu().cwiseMax(0.0);
  return it;
}

/// Lower bound on the optimal generation cost in $/h.
inline double bound_in_dollars(const CanonicalProblem& prob, const DualEvaluation& eval) {
  return eval.objective + prob.offset;
}

}  // namespace dcdual
