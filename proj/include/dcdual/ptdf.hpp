#pragma once

// Power transfer distribution factors.
//
// H = Omega E (E^T Omega E)^-1 maps the non-slack nodal injections to line
// flows. E is the line-bus incidence matrix with the slack column removed
// (+1 at from_bus, -1 at to_bus) and Omega = diag(susceptance). h_a is H with
// a zero column re-inserted at the slack position, so h_a * p for a full
// per-bus injection vector p gives the flows directly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "dcdual/case_model.hpp"
#include "dcdual/errors.hpp"

namespace dcdual {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PtdfMatrix {
  RowMatrixXd h_a;  // n_l x n_b
  int slack_index = 0;

  VectorXd flows(const VectorXd& injections) const { return h_a * injections; }
};

namespace detail {

/// Reduced incidence matrix, slack column deleted.
inline MatrixXd reduced_incidence(const PowerNetwork& net, int slack) {
  const auto n_l = static_cast<Index>(net.lines.size());
  const auto n_b = static_cast<Index>(net.buses.size());
  MatrixXd e = MatrixXd::Zero(n_l, n_b - 1);
  auto column = [slack](int bus) { return bus < slack ? bus : bus - 1; };
  for (Index k = 0; k < n_l; ++k) {
    const auto& l = net.lines[static_cast<std::size_t>(k)];
    if (l.from_bus != slack) e(k, column(l.from_bus)) += 1.0;
    if (l.to_bus != slack) e(k, column(l.to_bus)) -= 1.0;
  }
  return e;
}

inline VectorXd susceptances(const PowerNetwork& net) {
  VectorXd b(static_cast<Index>(net.lines.size()));
  for (std::size_t k = 0; k < net.lines.size(); ++k)
    b(static_cast<Index>(k)) = net.lines[k].susceptance;
  return b;
}

}  // namespace detail

inline PtdfMatrix build_ptdf(const PowerNetwork& net) {
  const int slack = net.slack_index();
  if (slack < 0) throw ValidationError("network has no slack bus");
  const auto n_l = static_cast<Index>(net.lines.size());
  const auto n_b = static_cast<Index>(net.buses.size());

  PtdfMatrix out;
  out.slack_index = slack;
  out.h_a = RowMatrixXd::Zero(n_l, n_b);
  if (n_b == 1 || n_l == 0) {
    if (n_b > 1) throw FactorizationError("network has buses but no lines");
    return out;
  }

  const MatrixXd e = detail::reduced_incidence(net, slack);
  const VectorXd omega = detail::susceptances(net);
  const MatrixXd omega_e = omega.asDiagonal() * e;
  const MatrixXd reduced = e.transpose() * omega_e;

  // (E^T Omega E) H^T = (Omega E)^T; the reduced Laplacian is symmetric
  // positive definite exactly when the network is connected.
  Eigen::LDLT<MatrixXd> ldlt(reduced);
  const VectorXd pivots = ldlt.vectorD();
  const double largest = pivots.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-12 * largest))
    throw FactorizationError("reduced susceptance matrix is singular");
  const MatrixXd h = ldlt.solve(omega_e.transpose()).transpose();

  for (Index j = 0, col = 0; j < n_b; ++j) {
    if (j == slack) continue;
    out.h_a.col(j) = h.col(col++);
  }
  return out;
}

/// DC power flow by angle solve on the bus susceptance matrix. Assembled
/// line by line and factored independently of build_ptdf, so it serves as a
/// cross-check for h_a.
inline VectorXd dc_powerflow_oracle(const PowerNetwork& net,
                                    const VectorXd& injections) {
  const auto n_b = static_cast<Index>(net.buses.size());
  if (injections.size() != n_b)
    throw PreconditionError("injection vector length does not match bus count");
  double total_load = 0.0;
  for (const auto& b : net.buses) total_load += std::abs(b.load);
  const double imbalance = injections.sum();
  if (std::abs(imbalance) > 1e-9 * std::max(total_load, 1.0))
    throw PreconditionError("injections are unbalanced (sum " +
                            std::to_string(imbalance) + ")");

  const int slack = net.slack_index();
  VectorXd flows = VectorXd::Zero(static_cast<Index>(net.lines.size()));
  if (n_b == 1) return flows;

  MatrixXd bbus = MatrixXd::Zero(n_b, n_b);
  for (const auto& l : net.lines) {
    bbus(l.from_bus, l.from_bus) += l.susceptance;
    bbus(l.to_bus, l.to_bus) += l.susceptance;
    bbus(l.from_bus, l.to_bus) -= l.susceptance;
    bbus(l.to_bus, l.from_bus) -= l.susceptance;
  }
  // drop slack row and column; slack angle is zero
  MatrixXd reduced(n_b - 1, n_b - 1);
  VectorXd rhs(n_b - 1);
  for (Index i = 0, ri = 0; i < n_b; ++i) {
    if (i == slack) continue;
    rhs(ri) = injections(i);
    for (Index j = 0, rj = 0; j < n_b; ++j) {
      if (j == slack) continue;
      reduced(ri, rj++) = bbus(i, j);
    }
    ++ri;
  }
  Eigen::LLT<MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success)
    throw FactorizationError("bus susceptance matrix is not positive definite");
  const VectorXd reduced_theta = llt.solve(rhs);
  VectorXd theta = VectorXd::Zero(n_b);
  for (Index i = 0, ri = 0; i < n_b; ++i)
    if (i != slack) theta(i) = reduced_theta(ri++);

  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& l = net.lines[k];
    flows(static_cast<Index>(k)) =
        l.susceptance * (theta(l.from_bus) - theta(l.to_bus));
  }
  return flows;
}

/// Debug dump: one row per line, one column per bus.
inline void write_ptdf_csv(std::ostream& os, const PtdfMatrix& ptdf) {
  os.precision(17);
  for (Index k = 0; k < ptdf.h_a.rows(); ++k) {
    for (Index j = 0; j < ptdf.h_a.cols(); ++j) {
      if (j) os << ',';
      os << ptdf.h_a(k, j);
    }
    os << '\n';
  }
}

}  // namespace dcdual
