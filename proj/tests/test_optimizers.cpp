#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace dcdual;
using dcdual::testing::fixture_names;
using dcdual::testing::load_problem;
using dcdual::testing::oracle_value;

namespace {

void expect_monotone(const ConvergenceTrace& trace) {
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    ASSERT_GE(trace.records[i].best_bound, trace.records[i - 1].best_bound) << "record " << i;
}

void expect_stop_consistent(const SolveResult& r, const OptimizerConfig& cfg) {
  const auto& rec = r.trace.records;
  ASSERT_EQ(static_cast<long>(rec.size()), r.iterations + 1);
  if (r.status() == SolveStatus::Converged) {
    ASSERT_GE(rec.size(), 2u);
    EXPECT_LT(std::abs(rec.back().objective - rec[rec.size() - 2].objective), cfg.tolerance);
  }
  for (std::size_t i = 1; i + 1 < rec.size(); ++i)
    ASSERT_GE(std::abs(rec[i].objective - rec[i - 1].objective), cfg.tolerance)
        << "run should have stopped at record " << i;
  if (r.status() == SolveStatus::MaxIters) {
    EXPECT_EQ(r.iterations, cfg.max_iters);
  }
}

OptimizerConfig config(Variant v, double alpha, long iters) {
  OptimizerConfig cfg;
  cfg.variant = v;
  cfg.alpha = alpha;
  cfg.max_iters = iters;
  cfg.record_time = false;
  return cfg;
}

}  // namespace

TEST(SolveDual, StartsFromZeroMultipliers) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  const SolveResult r = solve_dual(prob, config(Variant::Adam, 1.0, 0));
  ASSERT_EQ(r.trace.records.size(), 1u);
  EXPECT_EQ(r.trace.records[0].iter, 0);
  EXPECT_DOUBLE_EQ(r.trace.records[0].objective, -prob.cost.lpNorm<1>());
  EXPECT_TRUE((r.iterate.values.array() == 0.0).all());
  EXPECT_EQ(r.status(), SolveStatus::MaxIters);
}

TEST(SolveDual, ClassicMomentumReachesSingleBusOptimum) {
  const CanonicalProblem prob = load_problem("case1deg", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::GdmClassic, 0.1, 500);
  cfg.momentum = 0.9;
  const SolveResult r = solve_dual(prob, cfg);
  EXPECT_NEAR(r.best_bound, 250.0, 1e-6);
  long first_hit = -1;
  for (const auto& rec : r.trace.records)
    if (first_hit < 0 && std::abs(rec.best_bound - 250.0) <= 1e-6) first_hit = rec.iter;
  EXPECT_GE(first_hit, 0);
  EXPECT_LE(first_hit, 500);
}

TEST(SolveDual, PaperMomentumStopsOnSymmetricFirstStep) {
  // the double update moves lambda from 0 to -10, mirroring the objective
  // around the optimum at -5, so |delta gamma| = 0 ends the run at once
  const CanonicalProblem prob = load_problem("case1deg", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::Gdm, 0.1, 500);
  cfg.momentum = 0.9;
  const SolveResult r = solve_dual(prob, cfg);
  EXPECT_EQ(r.status(), SolveStatus::Converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_DOUBLE_EQ(r.iterate.lambda()(0), -10.0);
}

TEST(SolveDual, VariantStepRulesOnFirstStep) {
  const CanonicalProblem prob = load_problem("case1deg", ProblemKind::LP);
  // gradient at the origin: -A sign(c) - b = -50
  struct Case {
    Variant v;
    double expected;
  };
  for (const Case& c : {Case{Variant::Gdm, -2.0 * 0.01 * 50.0},
                        Case{Variant::GdmClassic, -0.01 * 50.0},
                        Case{Variant::AdaGrad, -0.01 * 50.0 / (50.0 + 1e-8)},
                        Case{Variant::Adam, -0.01 * 50.0 / (50.0 + 1e-8)}}) {
    OptimizerConfig cfg = config(c.v, 0.01, 1);
    const SolveResult r = solve_dual(prob, cfg);
    EXPECT_NEAR(r.iterate.lambda()(0), c.expected, 1e-15) << to_string(c.v);
  }
}

TEST(SolveDual, DefaultsReachHalfPercentWithin5000Iterations) {
  for (auto kind : {ProblemKind::LP, ProblemKind::QP}) {
    const CanonicalProblem prob = load_problem("case5", kind);
    const double opt = oracle_value(prob);
    for (auto v : {Variant::Adam, Variant::AdaGrad, Variant::Gdm}) {
      OptimizerConfig cfg = default_config(v, kind);
      cfg.max_iters = 5000;
      const SolveResult r = solve_dual(prob, cfg);
      EXPECT_LE(gap_percent(r.best_bound, opt), 0.5) << to_string(v) << " " << to_string(kind);
      EXPECT_GE(gap_percent(r.best_bound, opt), -1e-7);
    }
  }
}

TEST(SolveDual, BestBoundMonotoneAndBelowOptimum) {
  for (const auto& name : fixture_names()) {
    for (auto kind : {ProblemKind::LP, ProblemKind::QP}) {
      const CanonicalProblem prob = load_problem(name, kind);
      const double opt = oracle_value(prob);
      for (auto v : {Variant::Adam, Variant::AdaGrad, Variant::Gdm, Variant::GdmClassic}) {
        OptimizerConfig cfg = default_config(v, kind);
        cfg.max_iters = 3000;
        const SolveResult r = solve_dual(prob, cfg);
        expect_monotone(r.trace);
        for (const auto& rec : r.trace.records) {
          ASSERT_LE(rec.best_bound, opt + 1e-9 * std::abs(opt)) << name;
          ASSERT_LE(rec.objective + prob.offset, rec.best_bound);
        }
        expect_stop_consistent(r, cfg);
      }
    }
  }
}

TEST(SolveDual, BestIterateReproducesBestBound) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::QP);
  const SolveResult r = solve_dual(prob, default_config(Variant::Adam, ProblemKind::QP));
  EXPECT_EQ(bound_in_dollars(prob, eval_dual(prob, r.best_iterate)), r.best_bound);
}

TEST(SolveDual, StepDecayHookSeesGeometricSchedule) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::Adam, 2.0, 200);
  cfg.decay = StepDecay{0.99, 1};
  cfg.tolerance = 1e-300;
  std::vector<StepInfo> seen;
  solve_dual(prob, cfg, [&](const StepInfo& s) { seen.push_back(s); });
  ASSERT_EQ(seen.size(), 200u);
  for (const auto& s : seen)
    EXPECT_DOUBLE_EQ(s.alpha, 2.0 * std::pow(0.99, static_cast<double>(s.step)));
}

TEST(SolveDual, StepDecayEveryN) {
  OptimizerConfig cfg = config(Variant::Gdm, 1.0, 10);
  cfg.decay = StepDecay{0.5, 3};
  EXPECT_EQ(cfg.step_size(0), 1.0);
  EXPECT_EQ(cfg.step_size(2), 1.0);
  EXPECT_EQ(cfg.step_size(3), 0.5);
  EXPECT_EQ(cfg.step_size(8), 0.25);
  cfg.decay = StepDecay{1.0, 1};
  EXPECT_EQ(cfg.step_size(1000), 1.0);
}

TEST(SolveDual, OversizedStepDivergesGracefully) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::Gdm, 1e14, 100);
  cfg.momentum = 0.99;
  const SolveResult r = solve_dual(prob, cfg);
  EXPECT_EQ(r.status(), SolveStatus::Diverged);
  ASSERT_FALSE(r.trace.records.empty());
  for (const auto& rec : r.trace.records) {
    EXPECT_TRUE(std::isfinite(rec.objective));
    EXPECT_TRUE(std::isfinite(rec.best_bound));
  }
  EXPECT_LE(r.best_bound, oracle_value(prob));
  EXPECT_TRUE(r.iterate.values.allFinite());
  EXPECT_EQ(static_cast<long>(r.trace.records.size()), r.iterations + 1);
}

TEST(SolveDual, GradientNormStopRule) {
  const CanonicalProblem prob = load_problem("case1deg", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::GdmClassic, 0.1, 50);
  cfg.stop_rule = StopRule::GradientNorm;
  const SolveResult r = solve_dual(prob, cfg);
  // first step lands on lambda = -5 where sign(r) = 0 and b = 0
  EXPECT_EQ(r.status(), SolveStatus::Converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_DOUBLE_EQ(r.best_bound, 250.0);
}

TEST(SolveDual, DeterministicTraces) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::QP);
  for (auto v : {Variant::Adam, Variant::AdaGrad, Variant::Gdm}) {
    OptimizerConfig cfg = default_config(v, ProblemKind::QP);
    cfg.record_time = false;
    std::ostringstream a, b;
    write_trace_csv(a, solve_dual(prob, cfg).trace);
    write_trace_csv(b, solve_dual(prob, cfg).trace);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(OptimizerConfig, ValidationRejectsOutOfRange) {
  auto bad = [](auto mutate) {
    OptimizerConfig cfg;
    mutate(cfg);
    return cfg;
  };
  EXPECT_THROW(bad([](auto& c) { c.alpha = 0.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.momentum = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.beta1 = -0.1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.beta2 = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.epsilon = 0.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.decay = StepDecay{0.0, 1}; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.decay = StepDecay{1.5, 1}; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.decay = StepDecay{0.9, 0}; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.tolerance = 0.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.max_iters = -1; }).validate(), std::invalid_argument);
  EXPECT_NO_THROW(OptimizerConfig{}.validate());
}

TEST(VariantNames, RoundTrip) {
  for (auto v : {Variant::Adam, Variant::AdaGrad, Variant::Gdm, Variant::GdmClassic})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_FALSE(parse_variant("sgd").has_value());
}

TEST(GapPercent, Arithmetic) {
  EXPECT_EQ(gap_percent(100.0, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(gap_percent(99.0, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(gap_percent(-110.0, -100.0), 10.0);
  EXPECT_THROW(gap_percent(1.0, 0.0), std::domain_error);
}

TEST(GapPercent, RecomputedFromTrace) {
  const CanonicalProblem prob = load_problem("case5", ProblemKind::LP);
  const double opt = oracle_value(prob);
  const SolveResult r = solve_dual(prob, default_config(Variant::Gdm, ProblemKind::LP));
  const double from_trace = r.trace.records.back().best_bound;
  EXPECT_EQ(from_trace, r.best_bound);
  EXPECT_NEAR(gap_percent(r.best_bound, opt), 100.0 * (opt - from_trace) / std::abs(opt), 1e-12);
}

TEST(SolveBatch, SingleProblemMatchesSolveDual) {
  const CanonicalProblem prob = load_problem("case3qp", ProblemKind::QP);
  OptimizerConfig cfg = default_config(Variant::Adam, ProblemKind::QP);
  cfg.record_time = false;
  const auto batch = solve_batch(std::span(&prob, 1), cfg);
  ASSERT_TRUE(batch[0].ok());
  const SolveResult direct = solve_dual(prob, cfg);
  std::ostringstream a, b;
  write_trace_csv(a, batch[0].result->trace);
  write_trace_csv(b, direct.trace);
  EXPECT_EQ(a.str(), b.str());
}

TEST(SolveBatch, EightProblemsMatchSequential) {
  std::vector<CanonicalProblem> probs;
  for (const auto& name : fixture_names())
    for (auto kind : {ProblemKind::LP, ProblemKind::QP}) probs.push_back(load_problem(name, kind));
  ASSERT_EQ(probs.size(), 8u);
  OptimizerConfig cfg = default_config(Variant::AdaGrad, ProblemKind::LP);
  cfg.record_time = false;
  cfg.max_iters = 2000;
  const auto batch = solve_batch(probs, cfg, 4);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ASSERT_TRUE(batch[i].ok()) << batch[i].error;
    const SolveResult seq = solve_dual(probs[i], cfg);
    EXPECT_EQ(batch[i].result->best_bound, seq.best_bound) << i;
    EXPECT_EQ(batch[i].result->iterations, seq.iterations) << i;
  }
}

TEST(SolveBatch, FailuresStayIsolated) {
  std::vector<CanonicalProblem> probs{load_problem("case5", ProblemKind::LP),
                                      load_problem("case2", ProblemKind::LP)};
  probs[1].eq_matrix.resize(1, 7);  // corrupt: dimension mismatch
  OptimizerConfig cfg = default_config(Variant::Adam, ProblemKind::LP);
  cfg.max_iters = 100;
  const auto out = solve_batch(probs, cfg, 2);
  EXPECT_TRUE(out[0].ok());
  EXPECT_FALSE(out[1].ok());
  EXPECT_FALSE(out[1].error.empty());
}

TEST(SolveBatch, DivergenceDoesNotAbortOthers) {
  std::vector<CanonicalProblem> probs{load_problem("case5", ProblemKind::LP),
                                      load_problem("case5", ProblemKind::LP)};
  probs[1].cost *= 1e20;
  OptimizerConfig cfg = config(Variant::Adam, 10.0, 200);
  const auto out = solve_batch(probs, cfg, 2);
  ASSERT_TRUE(out[0].ok());
  ASSERT_TRUE(out[1].ok());
  EXPECT_NE(out[0].result->status(), SolveStatus::Diverged);
  EXPECT_EQ(out[1].result->status(), SolveStatus::Diverged);
}

TEST(SolveBatch, EmptyBatchRejected) {
  EXPECT_THROW(solve_batch(std::span<const CanonicalProblem>(), OptimizerConfig{}),
               PreconditionError);
}

TEST(TraceCsv, HeaderAndRowCount) {
  const CanonicalProblem prob = load_problem("case2", ProblemKind::LP);
  OptimizerConfig cfg = config(Variant::Adam, 3.0, 25);
  cfg.tolerance = 1e-300;
  const SolveResult r = solve_dual(prob, cfg);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,objective,best_bound,elapsed_s");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, r.iterations + 1);
}

TEST(Presets, PaperValuesVerbatim) {
  const auto p = find_preset("paper-2k-qp-adam");
  ASSERT_TRUE(p.has_value());
  const OptimizerConfig cfg = config_from_preset(*p);
  EXPECT_EQ(cfg.variant, Variant::Adam);
  EXPECT_EQ(cfg.alpha, 500.0);
  EXPECT_EQ(cfg.beta1, 0.9);
  EXPECT_EQ(cfg.beta2, 0.99);
  ASSERT_TRUE(cfg.decay.has_value());

  const OptimizerConfig gdm = config_from_preset(*find_preset("paper-2k-lp-gdm"));
  EXPECT_EQ(gdm.alpha, 0.601);
  EXPECT_EQ(gdm.momentum, 0.947);
  EXPECT_FALSE(gdm.decay.has_value());

  EXPECT_EQ(find_preset("paper-4601-lp-adagrad")->alpha, 2725.0);
  EXPECT_EQ(find_preset("paper-4601-qp-adam")->beta2, 0.999999);
  EXPECT_EQ(find_preset("paper-10k-qp-gdm")->momentum, 0.99);
  EXPECT_FALSE(find_preset("paper-2k-lp-sgd").has_value());
  EXPECT_EQ(preset_names().size(), 19u);
}

TEST(Presets, AllPaperPresetsValidate) {
  for (const auto& p : kPaperPresets) EXPECT_NO_THROW(config_from_preset(p).validate()) << p.name;
}
