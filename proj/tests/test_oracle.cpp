#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace dcdual;
using dcdual::testing::enumerate_vertices;
using dcdual::testing::fixture_names;
using dcdual::testing::load_problem;
using dcdual::testing::random_feasible_point;

namespace {

CanonicalProblem box_problem(const VectorXd& c, const VectorXd& m, ProblemKind kind) {
  CanonicalProblem p;
  p.kind = kind;
  p.cost = c;
  p.m_quad = m;
  p.eq_matrix.resize(0, c.size());
  p.eq_rhs.resize(0);
  p.ineq_matrix.resize(0, c.size());
  p.ineq_rhs.resize(0);
  return p;
}

}  // namespace

TEST(LpOracle, SingleBusForcedDispatch) {
  const CanonicalProblem prob = load_problem("case1deg", ProblemKind::LP);
  const PrimalSolution sol = solve_lp_oracle(prob);
  ASSERT_EQ(sol.status, PrimalStatus::Optimal);
  EXPECT_NEAR(sol.objective + prob.offset, 250.0, 1e-9);
  EXPECT_NEAR(sol.x(0), 0.0, 1e-12);
}

TEST(LpOracle, BoxOnly) {
  VectorXd c(4);
  c << 3.0, -2.0, 0.5, -7.0;
  const CanonicalProblem prob = box_problem(c, VectorXd::Zero(4), ProblemKind::LP);
  const PrimalSolution sol = solve_lp_oracle(prob);
  ASSERT_EQ(sol.status, PrimalStatus::Optimal);
  VectorXd expected(4);
  expected << -1.0, 1.0, -1.0, 1.0;
  EXPECT_LE((sol.x - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(sol.objective, -c.lpNorm<1>(), 1e-12);
}

TEST(LpOracle, MatchesVertexEnumeration) {
  for (const auto& name : fixture_names()) {
    const CanonicalProblem prob = load_problem(name, ProblemKind::LP);
    const auto vertices = enumerate_vertices(prob);
    ASSERT_FALSE(vertices.empty()) << name;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) best = std::min(best, prob.objective(v));
    const PrimalSolution sol = solve_lp_oracle(prob);
    ASSERT_EQ(sol.status, PrimalStatus::Optimal) << name;
    EXPECT_NEAR(sol.objective, best, 1e-9 * std::max(1.0, std::abs(best))) << name;
  }
}

TEST(LpOracle, KnownOptima) {
  EXPECT_NEAR(dcdual::testing::oracle_value(load_problem("case2", ProblemKind::LP)), 500.0, 1e-9);
  EXPECT_NEAR(dcdual::testing::oracle_value(load_problem("case3qp", ProblemKind::LP)), 2950.0, 1e-9);
  // independent B-theta formulation: line 1-2 binds with 243.77 MW at bus 1
  EXPECT_NEAR(dcdual::testing::oracle_value(load_problem("case5", ProblemKind::LP)),
              6943.396226415094, 1e-6);
}

TEST(LpOracle, InfeasibleReported) {
  CanonicalProblem prob = load_problem("case2", ProblemKind::LP);
  prob.eq_rhs(0) = 5.0;  // more than the generator can cover
  EXPECT_EQ(solve_lp_oracle(prob).status, PrimalStatus::Infeasible);
}

TEST(LpOracle, ResidualsAndKkt) {
  for (const auto& name : fixture_names()) {
    const CanonicalProblem prob = load_problem(name, ProblemKind::LP);
    const PrimalSolution sol = solve_lp_oracle(prob);
    EXPECT_LE(check_primal_feasible(prob, sol.x).max(), 1e-8) << name;
    EXPECT_LE(sol.kkt_residual, 1e-9 * std::max(1.0, std::abs(sol.objective))) << name;
    EXPECT_TRUE((sol.mu.array() >= 0.0).all());
  }
}

TEST(LpOracle, RefusesOversizedProblems) {
  const CanonicalProblem prob =
      box_problem(VectorXd::Ones(kOracleMaxVars + 1), VectorXd::Zero(kOracleMaxVars + 1),
                  ProblemKind::LP);
  EXPECT_THROW(solve_lp_oracle(prob), PreconditionError);
}

TEST(LpOracle, WrongKindRejected) {
  EXPECT_THROW(solve_lp_oracle(load_problem("case5", ProblemKind::QP)), PreconditionError);
  EXPECT_THROW(solve_qp_oracle(load_problem("case5", ProblemKind::LP)), PreconditionError);
}

TEST(QpOracle, UnconstrainedInteriorMinimum) {
  VectorXd c(1), m(1);
  c << 0.0;
  m << 1.0;
  const PrimalSolution sol = solve_qp_oracle(box_problem(c, m, ProblemKind::QP));
  ASSERT_EQ(sol.status, PrimalStatus::Optimal);
  EXPECT_NEAR(sol.x(0), 0.0, 1e-9);
  EXPECT_NEAR(sol.objective, 0.0, 1e-9);
}

TEST(QpOracle, BoxClippedMinimum) {
  VectorXd c(3), m(3);
  c << 1.0, -6.0, 0.0;
  m << 2.0, 1.0, 0.0;
  // x0 = -1/4 interior; x1 = 3 clipped to 1; x2 linear term zero
  const PrimalSolution sol = solve_qp_oracle(box_problem(c, m, ProblemKind::QP));
  ASSERT_EQ(sol.status, PrimalStatus::Optimal);
  EXPECT_NEAR(sol.x(0), -0.25, 1e-9);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-9);
  EXPECT_NEAR(sol.objective, 2.0 * 0.0625 - 0.25 + 1.0 - 6.0, 1e-9);
}

TEST(QpOracle, ZeroQuadraticMatchesLp) {
  for (const auto& name : fixture_names()) {
    CanonicalProblem qp = load_problem(name, ProblemKind::LP);
    qp.kind = ProblemKind::QP;
    const PrimalSolution q = solve_qp_oracle(qp);
    CanonicalProblem lp = qp;
    lp.kind = ProblemKind::LP;
    const PrimalSolution l = solve_lp_oracle(lp);
    ASSERT_EQ(q.status, PrimalStatus::Optimal) << name;
    EXPECT_NEAR(q.objective, l.objective, 1e-9 * std::max(1.0, std::abs(l.objective))) << name;
  }
}

TEST(QpOracle, KnownOptima) {
  EXPECT_NEAR(dcdual::testing::oracle_value(load_problem("case5", ProblemKind::QP)), 10967.875, 1e-6);
  EXPECT_NEAR(dcdual::testing::oracle_value(load_problem("case3qp", ProblemKind::QP)), 3875.9, 1e-6);
}

TEST(QpOracle, ResidualsAndKkt) {
  for (const auto& name : fixture_names()) {
    const CanonicalProblem prob = load_problem(name, ProblemKind::QP);
    const PrimalSolution sol = solve_qp_oracle(prob);
    ASSERT_EQ(sol.status, PrimalStatus::Optimal) << name;
    EXPECT_LE(check_primal_feasible(prob, sol.x).max(), 1e-8) << name;
    EXPECT_LE(sol.kkt_residual, 1e-9 * std::max(1.0, std::abs(sol.objective))) << name;
  }
}

TEST(QpOracle, NoFeasiblePointBeatsOptimum) {
  std::mt19937_64 rng(51);
  for (const auto& name : {"case3qp", "case5"}) {
    const CanonicalProblem prob = load_problem(name, ProblemKind::QP);
    const double opt = solve_qp_oracle(prob).objective;
    const auto vertices = enumerate_vertices(prob);
    for (int trial = 0; trial < 500; ++trial)
      ASSERT_GE(prob.objective(random_feasible_point(rng, vertices)), opt - 1e-9) << name;
  }
}

TEST(QpOracle, InfeasibleReported) {
  CanonicalProblem prob = load_problem("case5", ProblemKind::QP);
  prob.ineq_rhs.setConstant(-1.0);
  EXPECT_EQ(solve_qp_oracle(prob).status, PrimalStatus::Infeasible);
}

TEST(CheckPrimalFeasible, BallViolation) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  const PrimalResidual r = check_primal_feasible(prob, VectorXd::Constant(3, 2.0));
  EXPECT_DOUBLE_EQ(r.ball, 1.0);
}

TEST(CheckPrimalFeasible, InteriorPointsHaveNoViolation) {
  std::mt19937_64 rng(52);
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  const auto vertices = enumerate_vertices(prob);
  for (int trial = 0; trial < 50; ++trial) {
    const PrimalResidual r = check_primal_feasible(prob, random_feasible_point(rng, vertices));
    EXPECT_EQ(r.ball, 0.0);
    EXPECT_EQ(r.inequality, 0.0);
    EXPECT_LE(r.equality, 1e-12);
  }
}

TEST(CheckPrimalFeasible, ReportsEachKind) {
  const CanonicalProblem prob = load_problem("case2", ProblemKind::LP);
  VectorXd x(1);
  x << 0.5;  // 150 MW against a 100 MW load; the unit sits on the slack bus
  const PrimalResidual r = check_primal_feasible(prob, x);
  EXPECT_EQ(r.ball, 0.0);
  EXPECT_NEAR(r.equality, 0.5, 1e-12);
  EXPECT_NEAR(r.inequality, 0.0, 1e-12);
}
