#pragma once

// Projected supergradient ascent on the dual: Adam, AdaGrad and gradient with
// momentum. Every iterate is projected (mu >= 0) before it is evaluated, so
// each recorded objective + offset is a valid lower bound and the running
// maximum is an anytime bound.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dcdual/canonical.hpp"
#include "dcdual/dual_core.hpp"
#include "dcdual/errors.hpp"

namespace dcdual {

enum class Variant {
  Adam,
  AdaGrad,
  Gdm,         // momentum step followed by a plain gradient step
  GdmClassic,  // heavy-ball: momentum step only
};

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Adam: return "adam";
    case Variant::AdaGrad: return "adagrad";
    case Variant::Gdm: return "gdm";
    case Variant::GdmClassic: return "gdm-classic";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "adam") return Variant::Adam;
  if (name == "adagrad") return Variant::AdaGrad;
  if (name == "gdm") return Variant::Gdm;
  if (name == "gdm-classic") return Variant::GdmClassic;
  return std::nullopt;
}

inline bool uses_momentum(Variant v) { return v == Variant::Gdm || v == Variant::GdmClassic; }

enum class StopRule {
  ObjectiveDelta,  // |gamma_{i+1} - gamma_i| < tolerance
  GradientNorm,    // projected supergradient inf-norm < tolerance
};

struct StepDecay {
  double factor = 1.0;  // kappa in (0, 1]; 1 disables decay
  long every_n = 1;
};

struct OptimizerConfig {
  Variant variant = Variant::Adam;
  double alpha = 1.0;
  double momentum = 0.9;  // GDM only
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;   // Adam only
  double epsilon = 1e-8;  // Adam / AdaGrad
  std::optional<StepDecay> decay;
  double tolerance = 1e-6;
  long max_iters = 10000;
  StopRule stop_rule = StopRule::ObjectiveDelta;
  /// |objective| above this (or non-finite) marks the run as diverged.
  double divergence_threshold = 1e15;
  /// When false, elapsed_seconds is recorded as 0 so traces are reproducible
  /// byte for byte.
  bool record_time = true;
  KernelOptions kernel;

  /// Step size used on the zero-based step `step`.
  double step_size(long step) const {
    if (!decay || decay->factor == 1.0) return alpha;
    return alpha * std::pow(decay->factor, static_cast<double>(step / decay->every_n));
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (decay) {
      if (!(decay->factor > 0.0 && decay->factor <= 1.0)) fail("decay factor must lie in (0, 1]");
      if (decay->every_n < 1) fail("decay interval must be at least 1");
    }
    if (!(tolerance > 0.0)) fail("tolerance must be positive");
    if (max_iters < 0) fail("max_iters must be nonnegative");
    if (!(divergence_threshold > 0.0)) fail("divergence threshold must be positive");
  }
};

enum class SolveStatus { Converged, MaxIters, Diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::Diverged: return "Diverged";
  }
  return "?";
}

struct TraceRecord {
  long iter = 0;
  double objective = 0.0;   // dual objective before offset
  double best_bound = 0.0;  // best bound so far, $/h
  double elapsed_seconds = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  SolveStatus status = SolveStatus::MaxIters;
};

struct SolveResult {
  DualIterate iterate;       // last evaluated iterate (best iterate if diverged)
  DualIterate best_iterate;  // iterate that produced best_bound
  ConvergenceTrace trace;
  double best_bound = -std::numeric_limits<double>::infinity();  // $/h
  long iterations = 0;
  double wall_seconds = 0.0;

  SolveStatus status() const { return trace.status; }
};

struct StepInfo {
  long step = 0;      // zero-based
  double alpha = 0.0; // effective step size after decay
  double objective = 0.0;
};

using StepHook = std::function<void(const StepInfo&)>;

namespace detail {

inline double projected_gradient_norm(const DualIterate& it, const DualEvaluation& ev) {
  double norm = 0.0;
  for (Index k = 0; k < ev.gradient.size(); ++k) {
    double g = ev.gradient(k);
    const bool is_mu = k >= ev.n_eq && k < ev.n_eq + ev.n_ineq;
    if (is_mu && it.values(k) == 0.0 && g < 0.0) g = 0.0;
    norm = std::max(norm, std::abs(g));
  }
  return norm;
}

}  // namespace detail

inline SolveResult solve_dual(const CanonicalProblem& prob, const OptimizerConfig& cfg,
                              const StepHook& hook = {}) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;

  DualKernel kernel(prob, cfg.kernel);
  DualIterate theta = DualIterate::zeros(prob);
  DualEvaluation ev;
  kernel.prepare(ev);

  const Index dim = theta.values.size();
  VectorXd first = VectorXd::Zero(dim);   // velocity (GDM), m (Adam), G (AdaGrad)
  VectorXd second = VectorXd::Zero(dim);  // v (Adam)

  SolveResult result;
  auto& records = result.trace.records;
  const auto start = Clock::now();
  auto elapsed = [&] {
    return cfg.record_time ? std::chrono::duration<double>(Clock::now() - start).count() : 0.0;
  };
  auto diverged = [&](double objective) {
    return !std::isfinite(objective) || std::abs(objective) > cfg.divergence_threshold;
  };

  kernel.evaluate(theta, ev);
  if (diverged(ev.objective)) {
    result.iterate = result.best_iterate = theta;
    result.trace.status = SolveStatus::Diverged;
    return result;
  }
  double previous = ev.objective;
  result.best_bound = ev.objective + prob.offset;
  result.best_iterate = theta;
  records.reserve(static_cast<std::size_t>(std::min<long>(cfg.max_iters, 1 << 20)) + 1);
  records.push_back({0, ev.objective, result.best_bound, elapsed()});

  result.trace.status = SolveStatus::MaxIters;
  for (long step = 0; step < cfg.max_iters; ++step) {
    const double alpha = cfg.step_size(step);
    if (hook) hook({step, alpha, ev.objective});
    const auto& g = ev.gradient.array();
    auto x = theta.values.array();

    switch (cfg.variant) {
      case Variant::Gdm:
        first = cfg.momentum * first + alpha * ev.gradient;
        x += first.array() + alpha * g;
        break;
      case Variant::GdmClassic:
        first = cfg.momentum * first + alpha * ev.gradient;
        x += first.array();
        break;
      case Variant::AdaGrad:
        first.array() += g.square();
        x += alpha * g / (first.array().sqrt() + cfg.epsilon);
        break;
      case Variant::Adam: {
        const double t = static_cast<double>(step + 1);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        first.array() = cfg.beta1 * first.array() + (1.0 - cfg.beta1) * g;
        second.array() = cfg.beta2 * second.array() + (1.0 - cfg.beta2) * g.square();
        x += alpha * (first.array() / c1) / ((second.array() / c2).sqrt() + cfg.epsilon);
        break;
      }
    }

    if (!theta.values.allFinite()) {
      result.trace.status = SolveStatus::Diverged;
      break;
    }
    theta.mu() = theta.mu().cwiseMax(0.0);

    kernel.evaluate(theta, ev, /*reuse_sign_product=*/true);
    if (diverged(ev.objective)) {
      result.trace.status = SolveStatus::Diverged;
      break;
    }
    result.iterations = step + 1;
    const double bound = ev.objective + prob.offset;
    if (bound > result.best_bound) {
      result.best_bound = bound;
      result.best_iterate.values = theta.values;
    }
    records.push_back({step + 1, ev.objective, result.best_bound, elapsed()});

    const bool stop = cfg.stop_rule == StopRule::ObjectiveDelta
                          ? std::abs(ev.objective - previous) < cfg.tolerance
                          : detail::projected_gradient_norm(theta, ev) < cfg.tolerance;
    if (stop) {
      result.trace.status = SolveStatus::Converged;
      break;
    }
    previous = ev.objective;
  }

  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.iterate = result.trace.status == SolveStatus::Diverged ? result.best_iterate : theta;
  return result;
}

/// 100 (optimum - bound) / |optimum|.
inline double gap_percent(double bound, double primal_opt) {
  if (primal_opt == 0.0) throw std::domain_error("gap is undefined for a zero optimum");
  return 100.0 * (primal_opt - bound) / std::abs(primal_opt);
}

struct BatchResult {
  std::optional<SolveResult> result;
  std::string error;  // set when the solve threw

  bool ok() const { return result.has_value(); }
};

/// Independent solves run on a pool of worker threads. A failure in one
/// problem is recorded in its slot and does not affect the others.
inline std::vector<BatchResult> solve_batch(std::span<const CanonicalProblem> probs,
                                            const OptimizerConfig& cfg,
                                            unsigned threads = 0) {
  if (probs.empty()) throw PreconditionError("solve_batch requires at least one problem");
  std::vector<BatchResult> out(probs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(probs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < probs.size(); i = next++) {
      try {
        out[i].result = solve_dual(probs[i], cfg);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

/// CSV with header iter,objective,best_bound,elapsed_s; reals at %.17g.
inline void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace) {
  os << "iter,objective,best_bound,elapsed_s\n";
  char buf[128];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", r.iter, r.objective,
                  r.best_bound, r.elapsed_seconds);
    os << buf;
  }
}

}  // namespace dcdual
