#pragma once

// Experiment driver behind the command-line tool: load a case, solve the dual
// with one or all optimizer variants and report bound, gap, iterations and
// solve time.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcdual/canonical.hpp"
#include "dcdual/case_model.hpp"
#include "dcdual/optimizers.hpp"
#include "dcdual/oracle.hpp"
#include "dcdual/ptdf.hpp"

namespace dcdual {

struct RunReport {
  std::string case_name;
  ProblemKind kind = ProblemKind::LP;
  Variant variant = Variant::Adam;
  std::string preset;
  OptimizerConfig config;
  long iterations = 0;
  double wall_seconds = 0.0;   // ascent loop only
  double total_seconds = 0.0;  // including parsing, PTDF and canonicalization
  double final_bound = 0.0;    // best bound, $/h
  std::optional<double> reference_optimum;  // $/h
  std::string reference_source;             // "oracle", "user" or empty
  std::optional<double> gap_percent;
  SolveStatus status = SolveStatus::MaxIters;
};

struct PreparedCase {
  PowerNetwork network;
  CanonicalProblem problem;
  double setup_seconds = 0.0;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline PreparedCase prepare_case(const std::string& path, ProblemKind kind,
                                 const ParseOptions& options = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedCase pc;
  pc.network = parse_case(read_text_file(path), options);
  if (pc.network.name.empty()) {
    const auto slash = path.find_last_of('/');
    pc.network.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  }
  pc.problem = canonicalize(pc.network, build_ptdf(pc.network), kind);
  pc.setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return pc;
}

/// Optimum in $/h from the built-in oracle, or nullopt when the problem is
/// too large or not solvable to optimality.
inline std::optional<double> oracle_optimum(const CanonicalProblem& prob) {
  if (prob.num_vars() > kOracleMaxVars) return std::nullopt;
  const PrimalSolution sol =
      prob.kind == ProblemKind::LP ? solve_lp_oracle(prob) : solve_qp_oracle(prob);
  if (sol.status != PrimalStatus::Optimal) return std::nullopt;
  return sol.objective + prob.offset;
}

struct RunOutcome {
  RunReport report;
  SolveResult result;
};

inline RunOutcome run_variant(const PreparedCase& pc, const OptimizerConfig& cfg,
                              const std::string& preset,
                              std::optional<double> reference,
                              const std::string& reference_source) {
  RunOutcome out;
  out.result = solve_dual(pc.problem, cfg);
  auto& r = out.report;
  r.case_name = pc.network.name;
  r.kind = pc.problem.kind;
  r.variant = cfg.variant;
  r.preset = preset;
  r.config = cfg;
  r.iterations = out.result.iterations;
  r.wall_seconds = cfg.record_time ? out.result.wall_seconds : 0.0;
  r.total_seconds = cfg.record_time ? out.result.wall_seconds + pc.setup_seconds : 0.0;
  r.final_bound = out.result.best_bound;
  r.status = out.result.status();
  if (reference) {
    r.reference_optimum = reference;
    r.reference_source = reference_source;
    if (*reference != 0.0) r.gap_percent = dcdual::gap_percent(r.final_bound, *reference);
  }
  return out;
}

/// Runs several configurations on one case, sharing the reference solve, and
/// orders the reports by gap and then solve time.
inline std::vector<RunOutcome> run_compare(const PreparedCase& pc,
                                           const std::vector<OptimizerConfig>& configs,
                                           const std::vector<std::string>& presets,
                                           std::optional<double> reference,
                                           const std::string& reference_source) {
  std::vector<RunOutcome> outs;
  for (std::size_t i = 0; i < configs.size(); ++i)
    outs.push_back(run_variant(pc, configs[i], i < presets.size() ? presets[i] : "",
                               reference, reference_source));
  std::stable_sort(outs.begin(), outs.end(), [](const RunOutcome& a, const RunOutcome& b) {
    const double ga = a.report.gap_percent.value_or(0.0);
    const double gb = b.report.gap_percent.value_or(0.0);
    if (ga != gb) return ga < gb;
    return a.report.wall_seconds < b.report.wall_seconds;
  });
  return outs;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json hp;
  hp["alpha"] = r.config.alpha;
  if (uses_momentum(r.variant)) hp["momentum"] = r.config.momentum;
  if (r.variant == Variant::Adam) {
    hp["beta1"] = r.config.beta1;
    hp["beta2"] = r.config.beta2;
  }
  if (r.variant == Variant::Adam || r.variant == Variant::AdaGrad) hp["epsilon"] = r.config.epsilon;
  hp["decay"] = r.config.decay ? r.config.decay->factor : 1.0;
  hp["decay_every"] = r.config.decay ? r.config.decay->every_n : 1;
  hp["tolerance"] = r.config.tolerance;
  hp["max_iters"] = r.config.max_iters;

  nlohmann::json j;
  j["case_name"] = r.case_name;
  j["kind"] = to_string(r.kind);
  j["variant"] = to_string(r.variant);
  j["preset"] = r.preset;
  j["hyperparameters"] = hp;
  j["iterations"] = r.iterations;
  j["wall_seconds"] = r.wall_seconds;
  j["total_seconds"] = r.total_seconds;
  j["final_bound"] = r.final_bound;
  j["reference_optimum"] = r.reference_optimum ? nlohmann::json(*r.reference_optimum) : nlohmann::json();
  j["reference_source"] = r.reference_source;
  j["gap_percent"] = r.gap_percent ? nlohmann::json(*r.gap_percent) : nlohmann::json();
  j["status"] = to_string(r.status);
  return j;
}

/// Canonical problem as JSON; matrices are row-major nested arrays.
inline nlohmann::json to_json(const CanonicalProblem& p) {
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto mat = [&](const RowMatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
  };
  nlohmann::json j;
  j["kind"] = to_string(p.kind);
  j["num_vars"] = p.num_vars();
  j["m_quad"] = vec(p.m_quad);
  j["cost"] = vec(p.cost);
  j["eq_matrix"] = mat(p.eq_matrix);
  j["eq_rhs"] = vec(p.eq_rhs);
  j["ineq_matrix"] = mat(p.ineq_matrix);
  j["ineq_rhs"] = vec(p.ineq_rhs);
  j["offset"] = p.offset;
  j["t_bound"] = p.t_bound;
  j["scale"] = vec(p.norm_map.scale);
  j["shift"] = vec(p.norm_map.shift);
  j["gen_index"] = p.gen_index;
  return j;
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

/// One line per report field: the JSON key, padding, then the value.
inline std::string format_report(const RunReport& r) {
  std::ostringstream os;
  auto line = [&](const std::string& k, const std::string& v) {
    os << k << std::string(k.size() < 18 ? 18 - k.size() : 1, ' ') << v << '\n';
  };
  line("case_name", r.case_name);
  line("kind", to_string(r.kind));
  line("variant", to_string(r.variant));
  line("preset", r.preset.empty() ? "-" : r.preset);
  std::string hp = "alpha=" + detail::fmt(r.config.alpha);
  if (uses_momentum(r.variant)) hp += " momentum=" + detail::fmt(r.config.momentum);
  if (r.variant == Variant::Adam)
    hp += " beta1=" + detail::fmt(r.config.beta1) + " beta2=" + detail::fmt(r.config.beta2);
  hp += " decay=" + detail::fmt(r.config.decay ? r.config.decay->factor : 1.0);
  hp += " tolerance=" + detail::fmt(r.config.tolerance);
  hp += " max_iters=" + std::to_string(r.config.max_iters);
  line("hyperparameters", hp);
  line("iterations", std::to_string(r.iterations));
  line("wall_seconds", detail::fmt(r.wall_seconds));
  line("total_seconds", detail::fmt(r.total_seconds));
  line("final_bound", detail::fmt(r.final_bound, "%.17g"));
  line("reference_optimum", r.reference_optimum ? detail::fmt(*r.reference_optimum, "%.17g") : "-");
  line("reference_source", r.reference_source.empty() ? "-" : r.reference_source);
  line("gap_percent", r.gap_percent ? detail::fmt(*r.gap_percent, "%.17g") : "-");
  line("status", to_string(r.status));
  return os.str();
}

/// Side-by-side table, one row per variant.
inline std::string format_compare_table(const std::vector<RunReport>& reports) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-4s %10s %12s %22s %14s %-10s\n", "variant", "kind",
                "iterations", "wall_s", "final_bound", "gap_percent", "status");
  os << buf;
  for (const auto& r : reports) {
    const std::string gap = r.gap_percent ? detail::fmt(*r.gap_percent, "%.6g") : "-";
    std::snprintf(buf, sizeof buf, "%-12s %-4s %10ld %12.6f %22.12f %14s %-10s\n",
                  to_string(r.variant), to_string(r.kind), r.iterations, r.wall_seconds,
                  r.final_bound, gap.c_str(), to_string(r.status));
    os << buf;
  }
  return os.str();
}

}  // namespace dcdual
