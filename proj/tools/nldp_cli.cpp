#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nldp/config.hpp"
#include "nldp/power.hpp"
#include "nldp/report.hpp"

using namespace nldp;
namespace fs = std::filesystem;

namespace {

struct Run {
  ExperimentConfig cfg;
  ArtifactMeta meta;
  fs::path out;

  fs::path at(const std::string& name) const { return out / name; }
  void json_artifact(const std::string& name, const json& j) const { write_json(at(name), j, meta); }
};

// Failure raised after the artifacts are written.
struct NumericalFailure : Error {
  using Error::Error;
  const char* code() const noexcept override { return "NumericalFailure"; }
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const KernelBoundViolation*>(&e) || dynamic_cast<const NonIntegrableNearField*>(&e) ||
      dynamic_cast<const TailDivergence*>(&e) || dynamic_cast<const DegenerateScaling*>(&e))
    return 1;
  if (dynamic_cast<const Error*>(&e)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 1;
  return 2;
}

GridFunction beta_grid(const ExperimentConfig& c) {
  return GridFunction::sample(c.problem.exponents.n, c.solve.R, c.solve.N, barrier_eval, Exterior::constant(0.0),
                              c.solve.interp);
}

GridFunction solve_and_store(const Run& r, SolveReport* report = nullptr) {
  auto [u, rep] = solve(r.cfg.problem, r.cfg.solve);
  write_grid_function(r.at("solution"), u, r.cfg.exterior_spec, r.meta);
  r.json_artifact("solve_report.json", to_json(rep));
  residual_table(rep).write(r.at("residual_history.csv"), r.meta);
  if (report) *report = rep;
  if (!rep.converged())
    throw NumericalFailure("solve stopped at max_iters with residual " + format_double(rep.final_residual));
  return std::move(u);
}

GridFunction field_for(const Run& r) {
  const auto& c = r.cfg;
  if (c.eval_u == "solve") return solve_and_store(r);
  if (c.eval_u == "file") return read_grid_function(c.eval_file);
  return beta_grid(c);
}

void cmd_validate(const Run& r) {
  json j = to_json(r.cfg.problem);
  const auto& s = r.cfg.solve;
  j["grid"] = {{"R", s.R}, {"N", s.N}, {"h", 2.0 * s.R / (s.N - 1)}, {"exterior", s.exterior.tag}};
  r.json_artifact("validate.json", j);
  r.cfg.problem.validate();
}

void cmd_eval(const Run& r) {
  const auto& c = r.cfg;
  c.problem.validate();
  auto u = field_for(r);
  std::vector<Point> pts = c.eval_points;
  if (pts.empty()) pts.push_back(Point::Zero(c.problem.exponents.n));
  CsvTable t;
  t.header = c.problem.exponents.n == 1 ? std::vector<std::string>{"x", "value", "error"}
                                         : std::vector<std::string>{"x", "y", "value", "error"};
  json rows = json::array();
  for (const auto& x : pts) {
    auto e = evaluate(u, x, c.problem, c.quadrature);
    std::vector<double> row(x.data(), x.data() + x.size());
    row.push_back(e.value);
    row.push_back(e.error);
    t.rows.push_back(row);
    rows.push_back({{"x", to_json(x)}, {"value", e.value}, {"error", e.error}});
  }
  t.write(r.at("eval.csv"), r.meta);
  r.json_artifact("eval.json", {{"field", c.eval_u}, {"points", rows}});
}

void cmd_constants(const Run& r) {
  const auto& c = r.cfg;
  auto b = compute_constants(c.problem, c.epsilon, -1.0, c.selection);
  r.json_artifact("constants.json", to_json(b));
}

void cmd_scaling(const Run& r) {
  const auto& c = r.cfg;
  c.problem.validate();
  const int n = c.problem.exponents.n;
  GridFunction u = c.scaling_u == "solve" ? solve_and_store(r) : beta_grid(c);
  json runs = json::array();
  CsvTable t;
  t.header = {"lambda", "mu", "max_rel"};
  auto id = scaling_identity_check(u, c.problem, ScalingContext::identity(n), c.quadrature, c.scaling_probes);
  for (auto [lam, mu] : c.scaling_pairs) {
    auto chk = scaling_identity_check(u, c.problem, ScalingContext::rescale(lam, mu, Point::Zero(n)), c.quadrature,
                                      c.scaling_probes);
    t.rows.push_back({lam, mu, chk.max_rel});
    json probes = json::array();
    for (std::size_t k = 0; k < chk.probes.size(); ++k)
      probes.push_back({{"x", to_json(chk.probes[k])}, {"lhs", chk.lhs[k]}, {"rhs", chk.rhs[k]}});
    runs.push_back({{"lambda", lam}, {"mu", mu}, {"max_rel", chk.max_rel}, {"probes", probes}});
  }
  t.write(r.at("scaling.csv"), r.meta);
  r.json_artifact("scaling.json", {{"identity_max_rel", id.max_rel}, {"contexts", runs}});
}

void cmd_inequalities(const Run& r) {
  const auto& c = r.cfg;
  FuzzOptions f;
  f.seed = c.seed;
  f.draws = c.fuzz_draws;
  FuzzOptions g = f;
  g.draws = c.c2_draws;
  std::vector<IneqReport> reps{fuzz_revL1(f), fuzz_superlinear(f), fuzz_singular(f), fuzz_C2(g)};
  json lemmas = json::array();
  std::uint64_t bad = 0;
  for (const auto& x : reps) {
    lemmas.push_back(to_json(x));
    bad += x.violations;
  }
  json local = json::array();
  auto phi = C2Function::barrier();
  for (auto m : {LocalMode::Rev5, LocalMode::Rev9, LocalMode::Rev6, LocalMode::Rev8, LocalMode::Rev31}) {
    json e = {{"mode", local_mode_name(m)}};
    auto why = local_hypothesis_failure(c.problem, m, std::numeric_limits<double>::quiet_NaN());
    if (!why.empty()) {
      e["skipped"] = why;
    } else {
      try {
        e["result"] = to_json(check_local_integrability(phi, c.problem, m));
      } catch (const DivergenceDetected& ex) {
        e["divergent"] = ex.what();
        ++bad;
      }
    }
    local.push_back(e);
  }
  r.json_artifact("inequalities.json", {{"lemmas", lemmas}, {"integrability", local}});
  if (bad) throw NumericalFailure(std::to_string(bad) + " inequality violations or divergent integrals");
}

void cmd_solve(const Run& r) {
  r.cfg.problem.validate();
  solve_and_store(r);
}

void cmd_holder(const Run& r) {
  const auto& c = r.cfg;
  c.problem.validate();
  auto u = field_for(r);
  auto fit = holder_fit(u, c.center, c.i_min, c.i_max);
  std::vector<Oscillation> osc;
  for (double rad : fit.radii) osc.push_back(oscillation(u, c.center, rad));
  holder_table(fit, osc).write(r.at("holder_trace.csv"), r.meta);
  json j = to_json(fit);
  j["center"] = to_json(c.center);
  j["field"] = c.eval_u;
  r.json_artifact("holder.json", j);
}

void cmd_pipeline(const Run& r) {
  const auto& c = r.cfg;
  c.problem.validate();
  PipelineOptions opt;
  opt.epsilon = c.epsilon;
  opt.levels = c.levels;
  opt.x0 = c.center;
  opt.selection = c.selection;
  opt.dyadic.gamma = c.gamma;
  opt.dyadic.quad = c.quadrature;
  auto res = run_pipeline(c.problem, c.solve, opt);
  write_grid_function(r.at("solution"), res.u, c.exterior_spec, r.meta);
  r.json_artifact("solve_report.json", to_json(res.solve));
  residual_table(res.solve).write(r.at("residual_history.csv"), r.meta);
  r.json_artifact("constants.json", to_json(res.bundle));
  trace_table(res.trace).write(r.at("trace.csv"), r.meta);
  json j = to_json(res.trace);
  j["u_sup"] = res.u_sup;
  j["lambda"] = res.bundle.lambda;
  r.json_artifact("pipeline.json", j);
  if (!res.solve.converged()) throw NumericalFailure("solve did not converge");
  if (res.trace.breakdown)
    throw NumericalFailure("dyadic iteration broke down at level " + std::to_string(res.trace.breakdown_level) +
                           ": " + res.trace.breakdown_reason);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("nldp"));
  if (const char* lvl = std::getenv("NLDP_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

  CLI::App app{"Nonlocal double phase toolkit"};
  app.set_version_flag("--version", std::string(NLDP_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  std::string config, out;
  int threads = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  app.add_option("--config", config, "experiment config (JSON)")->required();
  app.add_option("--threads", threads, "worker threads (default: hardware)");
  auto* seed_opt = app.add_option("--seed", seed, "global RNG seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--set", sets, "override key=value (dotted path)");

  using Fn = void (*)(const Run&);
  const std::vector<std::tuple<const char*, const char*, Fn>> cmds{
      {"validate", "report exponent and parameter validation", cmd_validate},
      {"eval", "evaluate the operator at points", cmd_eval},
      {"constants", "select eta, kappa and report sigma, theta, gamma", cmd_constants},
      {"scaling-test", "check the rescaling identity", cmd_scaling},
      {"check-inequalities", "fuzz the pointwise inequalities and integrability", cmd_inequalities},
      {"solve", "solve the Dirichlet-type problem", cmd_solve},
      {"holder", "fit a Holder exponent from dyadic oscillations", cmd_holder},
      {"pipeline", "solve, compute constants, run the dyadic iteration", cmd_pipeline}};
  for (const auto& [name, help, fn] : cmds) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  Fn fn = nullptr;
  for (const auto& [name, help, f] : cmds)
    if (sub == name) fn = f;

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  Run run;
  run.meta.subcommand = sub;
  run.out = out.empty() ? fs::path("out") : fs::path(out);
  int rc = 0;
  json err = nullptr;
  try {
    run.cfg = load_config(config, sets, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (out.empty()) run.out = run.cfg.output_dir;
    run.meta.config_hash = run.cfg.hash;
    run.meta.seed = run.cfg.seed;
    run.json_artifact("config.json", {{"config", run.cfg.raw}});
    fn(run);
  } catch (const std::exception& e) {
    rc = exit_code_for(e);
    const auto* ne = dynamic_cast<const Error*>(&e);
    err = {{"type", ne ? ne->code() : "std::exception"}, {"message", e.what()}};
    spdlog::error("{}: {}", ne ? ne->code() : "error", e.what());
  }
  try {
    write_json(run.at("error.json"), {{"ok", rc == 0}, {"exit_code", rc}, {"error", err}}, run.meta);
  } catch (const std::exception& e) {
    spdlog::error("cannot write error.json: {}", e.what());
  }
  return rc;
}
