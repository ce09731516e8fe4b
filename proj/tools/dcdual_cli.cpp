// dcdual: lower bounds on DC optimal power flow cost by dual ascent.
//
//   dcdual solve   <case.m> --cost linear --opt adam [options]
//   dcdual compare <case.m> --cost quadratic [options]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dcdual/bench.hpp"
#include "dcdual/dcdual.hpp"

namespace {

using namespace dcdual;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string case_path;
  std::string cost = "linear";
  std::string opt;
  std::optional<double> alpha, momentum, beta1, beta2, decay, tol, reference;
  std::optional<long> decay_every, max_iters, slack;
  std::string preset = "default";
  std::string stop = "delta";
  std::string trace_path, json_path, canonical_path;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Options& o, bool with_opt) {
  cmd->add_option("case", o.case_path, "MATPOWER case file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--cost", o.cost, "Cost model")->check(CLI::IsMember({"linear", "quadratic"}));
  if (with_opt)
    cmd->add_option("--opt", o.opt, "Optimizer")
        ->required()
        ->check(CLI::IsMember({"adam", "adagrad", "gdm", "gdm-classic"}));
  cmd->add_option("--alpha", o.alpha, "Step size");
  cmd->add_option("--momentum", o.momentum, "Momentum factor (gdm)");
  cmd->add_option("--beta1", o.beta1, "First-moment decay (adam)");
  cmd->add_option("--beta2", o.beta2, "Second-moment decay (adam)");
  cmd->add_option("--decay", o.decay, "Step decay factor in (0, 1]");
  cmd->add_option("--decay-every", o.decay_every, "Iterations between decay steps");
  cmd->add_option("--tol", o.tol, "Stopping tolerance");
  cmd->add_option("--max-iters", o.max_iters, "Iteration limit");
  cmd->add_option("--preset", o.preset, "Named hyperparameter profile");
  cmd->add_option("--stop", o.stop, "Stopping rule")->check(CLI::IsMember({"delta", "gradient"}));
  cmd->add_option("--slack", o.slack, "Override the slack bus id");
  cmd->add_option("--trace", o.trace_path, "Write the convergence trace CSV");
  cmd->add_option("--json", o.json_path, "Write the report as JSON");
  cmd->add_option("--reference", o.reference, "Known optimum in $/h used for the gap");
  cmd->add_option("--dump-canonical", o.canonical_path, "Write the canonical problem as JSON");
  cmd->add_flag("--no-timing", o.no_timing, "Record zero elapsed times in traces");
}

ProblemKind kind_of(const Options& o) {
  return o.cost == "quadratic" ? ProblemKind::QP : ProblemKind::LP;
}

OptimizerConfig base_config(const Options& o, Variant variant, const std::string& preset) {
  const ProblemKind kind = kind_of(o);
  if (preset == "default") return default_config(variant, kind);
  const auto p = find_preset(preset);
  if (!p) throw UsageError("unknown preset '" + preset + "'");
  if (p->variant != variant)
    throw UsageError("preset '" + preset + "' is for " + to_string(p->variant) + ", not " +
                     to_string(variant));
  if (p->kind != kind)
    throw UsageError("preset '" + preset + "' is for " + std::string(to_string(p->kind)) +
                     " problems");
  return config_from_preset(*p);
}

OptimizerConfig build_config(const Options& o, Variant variant, const std::string& preset,
                             bool strict) {
  if (strict) {
    if (o.momentum && !uses_momentum(variant))
      throw UsageError("--momentum applies to gdm only");
    if ((o.beta1 || o.beta2) && variant != Variant::Adam)
      throw UsageError("--beta1/--beta2 apply to adam only");
  }
  if (o.decay_every && !o.decay) throw UsageError("--decay-every requires --decay");

  OptimizerConfig cfg = base_config(o, variant, preset);
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.momentum && uses_momentum(variant)) cfg.momentum = *o.momentum;
  if (variant == Variant::Adam) {
    if (o.beta1) cfg.beta1 = *o.beta1;
    if (o.beta2) cfg.beta2 = *o.beta2;
  }
  if (o.decay) cfg.decay = StepDecay{*o.decay, o.decay_every.value_or(1)};
  if (o.tol) cfg.tolerance = *o.tol;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  cfg.stop_rule = o.stop == "gradient" ? StopRule::GradientNorm : StopRule::ObjectiveDelta;
  cfg.record_time = !o.no_timing;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

PreparedCase load(const Options& o) {
  ParseOptions po;
  po.slack_bus_id = o.slack;
  PreparedCase pc = prepare_case(o.case_path, kind_of(o), po);
  if (!o.canonical_path.empty()) open_output(o.canonical_path) << to_json(pc.problem).dump(2) << '\n';
  return pc;
}

std::pair<std::optional<double>, std::string> reference_for(const Options& o,
                                                            const CanonicalProblem& prob) {
  if (o.reference) return {*o.reference, "user"};
  if (auto opt = oracle_optimum(prob)) return {*opt, "oracle"};
  return {std::nullopt, ""};
}

int exit_code(SolveStatus s) { return s == SolveStatus::Diverged ? 1 : 0; }

int run_solve(const Options& o) {
  const Variant variant = *parse_variant(o.opt);
  const OptimizerConfig cfg = build_config(o, variant, o.preset, true);
  const PreparedCase pc = load(o);
  const auto [reference, source] = reference_for(o, pc.problem);
  const RunOutcome out = run_variant(pc, cfg, o.preset, reference, source);

  std::cout << format_report(out.report);
  if (!o.json_path.empty()) open_output(o.json_path) << to_json(out.report).dump(2) << '\n';
  if (!o.trace_path.empty()) {
    auto f = open_output(o.trace_path);
    write_trace_csv(f, out.result.trace);
  }
  return exit_code(out.report.status);
}

// "default" or a preset family such as "paper-2k-qp"; each variant picks its
// own member of the family.
std::string preset_for(const std::string& family, Variant v) {
  if (family == "default") return family;
  return family + "-" + to_string(v);
}

std::string trace_path_for(const std::string& path, Variant v) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  const std::string stem = has_ext ? path.substr(0, dot) : path;
  const std::string ext = has_ext ? path.substr(dot) : "";
  return stem + "-" + to_string(v) + ext;
}

int run_compare(const Options& o) {
  const std::vector<Variant> variants{Variant::Adam, Variant::AdaGrad, Variant::Gdm};
  std::vector<OptimizerConfig> configs;
  std::vector<std::string> presets;
  for (Variant v : variants) {
    presets.push_back(preset_for(o.preset, v));
    configs.push_back(build_config(o, v, presets.back(), false));
  }
  const PreparedCase pc = load(o);
  const auto [reference, source] = reference_for(o, pc.problem);
  const auto outs = dcdual::run_compare(pc, configs, presets, reference, source);

  std::vector<RunReport> reports;
  nlohmann::json arr = nlohmann::json::array();
  int code = 0;
  for (const auto& out : outs) {
    reports.push_back(out.report);
    arr.push_back(to_json(out.report));
    code = std::max(code, exit_code(out.report.status));
    if (!o.trace_path.empty()) {
      auto f = open_output(trace_path_for(o.trace_path, out.report.variant));
      write_trace_csv(f, out.result.trace);
    }
  }
  std::cout << "case " << pc.network.name << ", " << to_string(pc.problem.kind) << ", reference "
            << (reference ? detail::fmt(*reference, "%.17g") + " (" + source + ")" : "-") << '\n';
  std::cout << format_compare_table(reports);
  if (!o.json_path.empty()) open_output(o.json_path) << arr.dump(2) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrange-dual lower bounds for DC optimal power flow"};
  app.require_subcommand(1);
  Options solve_opts, compare_opts;
  auto* solve = app.add_subcommand("solve", "Run one optimizer on a case");
  add_common(solve, solve_opts, true);
  auto* compare = app.add_subcommand("compare", "Run adam, adagrad and gdm side by side");
  add_common(compare, compare_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return solve->parsed() ? run_solve(solve_opts) : run_compare(compare_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
