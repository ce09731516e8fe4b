#pragma once

// Normalized dispatch problem over the unit infinity-ball:
//
//   min  x^T M x + c^T x      s.t.  A x = b,  C x <= d,  ||x||_inf <= 1
//
// with M diagonal. Generator outputs p are mapped to x by
// p = scale .* x + shift, where scale and shift are the half-range and
// midpoint of each generator's limits. The constant dropped by this change of
// variables is kept in `offset`, so objective(x) + offset is the generation
// cost in $/h.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcdual/case_model.hpp"
#include "dcdual/errors.hpp"
#include "dcdual/ptdf.hpp"

namespace dcdual {

enum class ProblemKind { LP, QP };

inline const char* to_string(ProblemKind k) { return k == ProblemKind::LP ? "LP" : "QP"; }

struct NormalizationMap {
  VectorXd scale;  // (upper - lower) / 2, strictly positive
  VectorXd shift;  // (upper + lower) / 2
  VectorXd lower;
  VectorXd upper;

  /// Divides by the distance from the midpoint to the limit on the same side,
  /// so the limits map to +1 and -1 and the midpoint to 0 exactly.
  VectorXd normalize(const VectorXd& p) const {
    VectorXd x(p.size());
    for (Index i = 0; i < p.size(); ++i) {
      const double mid = 0.5 * (upper(i) + lower(i));
      x(i) = p(i) >= mid ? (p(i) - mid) / (upper(i) - mid) : (p(i) - mid) / (mid - lower(i));
    }
    return x;
  }
  /// Interpolates between the limits so that x = +1, -1, 0 reproduce the
  /// upper limit, lower limit and midpoint exactly.
  VectorXd denormalize(const VectorXd& x) const {
    return (0.5 * ((1.0 + x.array()) * upper.array() +
                   (1.0 - x.array()) * lower.array()))
        .matrix();
  }
};

struct CanonicalProblem {
  ProblemKind kind = ProblemKind::LP;
  VectorXd m_quad;         // diagonal of M, >= 0
  VectorXd cost;           // c
  RowMatrixXd eq_matrix;   // A
  VectorXd eq_rhs;         // b
  RowMatrixXd ineq_matrix; // C
  VectorXd ineq_rhs;       // d
  double offset = 0.0;     // $/h
  double t_bound = 0.0;    // upper bound on the total quadratic cost, $/h (QP)
  NormalizationMap norm_map;

  // Decision variable i is generator gen_index[i]; generators with
  // p_min == p_max are constants held in fixed_dispatch.
  std::vector<int> gen_index;
  VectorXd fixed_dispatch;  // per generator, p.u.; meaningful for fixed units

  Index num_vars() const { return cost.size(); }
  Index num_eq() const { return eq_rhs.size(); }
  Index num_ineq() const { return ineq_rhs.size(); }

  double objective(const VectorXd& x) const {
    return x.dot(m_quad.cwiseProduct(x)) + cost.dot(x);
  }
};

/// Dispatch cost in $/h of a full per-generator output vector (p.u.).
/// LP ignores quadratic coefficients.
inline double dispatch_cost(const PowerNetwork& net, const VectorXd& p_gen,
                            ProblemKind kind) {
  double total = net.cost_offset;
  const double base = net.base_mva;
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    const double p = p_gen(static_cast<Index>(g)) * base;  // MW
    total += gen.cost_lin * p;
    if (kind == ProblemKind::QP) total += gen.cost_quad * p * p;
  }
  return total;
}

inline CanonicalProblem canonicalize(const PowerNetwork& net, const PtdfMatrix& ptdf,
                                     ProblemKind kind) {
  const double base = net.base_mva;
  const auto n_b = static_cast<Index>(net.buses.size());
  const auto n_l = static_cast<Index>(net.lines.size());
  const auto n_g = static_cast<Index>(net.generators.size());
  if (ptdf.h_a.rows() != n_l || ptdf.h_a.cols() != n_b)
    throw PreconditionError("PTDF dimensions do not match the network");

  CanonicalProblem prob;
  prob.kind = kind;
  prob.offset = net.cost_offset;
  prob.fixed_dispatch = VectorXd::Zero(n_g);

  VectorXd load(n_b);
  for (Index i = 0; i < n_b; ++i) load(i) = net.buses[static_cast<std::size_t>(i)].load;

  const auto lin_pu = [&](const Generator& g) { return g.cost_lin * base; };
  const auto quad_pu = [&](const Generator& g) {
    return kind == ProblemKind::QP ? g.cost_quad * base * base : 0.0;
  };

  for (Index g = 0; g < n_g; ++g) {
    const auto& gen = net.generators[static_cast<std::size_t>(g)];
    if (gen.p_min == gen.p_max) {
      const double p = gen.p_min;
      prob.fixed_dispatch(g) = p;
      load(gen.bus) -= p;
      prob.offset += lin_pu(gen) * p + quad_pu(gen) * p * p;
    } else {
      prob.gen_index.push_back(static_cast<int>(g));
    }
  }

  const auto n = static_cast<Index>(prob.gen_index.size());
  auto& nm = prob.norm_map;
  nm.scale.resize(n);
  nm.shift.resize(n);
  nm.lower.resize(n);
  nm.upper.resize(n);
  prob.cost.resize(n);
  prob.m_quad.resize(n);
  VectorXd lin(n), quad(n);
  for (Index i = 0; i < n; ++i) {
    const auto& gen = net.generators[static_cast<std::size_t>(prob.gen_index[static_cast<std::size_t>(i)])];
    nm.lower(i) = gen.p_min;
    nm.upper(i) = gen.p_max;
    nm.scale(i) = 0.5 * (gen.p_max - gen.p_min);
    nm.shift(i) = 0.5 * (gen.p_max + gen.p_min);
    lin(i) = lin_pu(gen);
    quad(i) = quad_pu(gen);
  }

  // q p^2 + c p with p = s x + m  ->  q s^2 x^2 + (c s + 2 q s m) x + (c m + q m^2)
  const auto& s = nm.scale.array();
  const auto& m = nm.shift.array();
  prob.m_quad = (quad.array() * s * s).matrix();
  prob.cost = (lin.array() * s + 2.0 * quad.array() * s * m).matrix();
  prob.offset += (lin.array() * m + quad.array() * m * m).sum();
  prob.t_bound =
      (quad.array() * nm.lower.array().square().max(nm.upper.array().square())).sum();

  // power balance: 1^T p = 1^T load
  prob.eq_matrix = nm.scale.transpose();
  prob.eq_rhs = VectorXd::Constant(1, load.sum() - nm.shift.sum());

  // line limits: -f <= H_a (G p - load) <= f
  RowMatrixXd hg(n_l, n);
  for (Index i = 0; i < n; ++i)
    hg.col(i) = ptdf.h_a.col(net.generators[static_cast<std::size_t>(prob.gen_index[static_cast<std::size_t>(i)])].bus);
  VectorXd limit(n_l);
  for (Index k = 0; k < n_l; ++k) limit(k) = net.lines[static_cast<std::size_t>(k)].flow_limit;
  const VectorXd load_flow = ptdf.h_a * load;

  prob.ineq_matrix.resize(2 * n_l, n);
  prob.ineq_rhs.resize(2 * n_l);
  const VectorXd hg_shift = hg * nm.shift;
  prob.ineq_matrix.topRows(n_l) = hg * nm.scale.asDiagonal();
  prob.ineq_matrix.bottomRows(n_l) = -prob.ineq_matrix.topRows(n_l);
  prob.ineq_rhs.head(n_l) = limit + load_flow - hg_shift;
  prob.ineq_rhs.tail(n_l) = limit - load_flow + hg_shift;
  return prob;
}

inline CanonicalProblem canonicalize(const PowerNetwork& net, ProblemKind kind) {
  return canonicalize(net, build_ptdf(net), kind);
}

/// Maps a canonical point back to a full per-generator dispatch (p.u.).
inline VectorXd denormalize_point(const CanonicalProblem& prob, const VectorXd& x) {
  if (x.size() != prob.num_vars())
    throw PreconditionError("point dimension does not match the problem");
  if (x.size() > 0 && !(x.cwiseAbs().maxCoeff() <= 1.0 + 1e-9))
    throw PreconditionError("point lies outside the unit infinity-ball");
  VectorXd p = prob.fixed_dispatch;
  const VectorXd free = prob.norm_map.denormalize(x);
  for (std::size_t i = 0; i < prob.gen_index.size(); ++i)
    p(prob.gen_index[i]) = free(static_cast<Index>(i));
  return p;
}

/// Inverse of denormalize_point for the free generators.
inline VectorXd normalize_dispatch(const CanonicalProblem& prob, const VectorXd& p_gen) {
  VectorXd p(prob.num_vars());
  for (std::size_t i = 0; i < prob.gen_index.size(); ++i)
    p(static_cast<Index>(i)) = p_gen(prob.gen_index[i]);
  return prob.norm_map.normalize(p);
}

}  // namespace dcdual
