#include "nldp/report.hpp"

#include <cmath>

namespace nldp {

json to_json(const Point& x) {
  json a = json::array();
  for (Eigen::Index d = 0; d < x.size(); ++d) a.push_back(finite_or_string(x(d)));
  return a;
}

json to_json(const ProblemParams& P) {
  const auto& e = P.exponents;
  auto v = validate_exponents(e, P.homogeneous);
  return {{"exponents", {{"n", e.n}, {"s", e.s}, {"t", e.t}, {"p", e.p}, {"q", e.q}}},
          {"valid", v.ok},
          {"violations", v.violations},
          {"homogeneous", P.homogeneous},
          {"growth_threshold", finite_or_string(growth_threshold(e, P.q_phase()))},
          {"kernel", {{"sp", P.Ksp.tag()}, {"tq", P.Ktq.tag()}, {"Lambda", P.Lambda()}}},
          {"coefficient", {{"tag", P.a.tag()}, {"M", P.a.M()}, {"symmetric", P.a.symmetric()}}},
          {"c_hat", P.c_hat},
          {"M_hat", P.M_hat()},
          {"source", {{"tag", P.f.tag}, {"sup", P.f.sup}}}};
}

json to_json(const ConstantsBundle& b) {
  json regimes = json::array();
  for (const auto& r : b.certificate.regimes) {
    json worst = json::object();
    for (int k = 0; k < TermValues::count; ++k) worst[TermValues::names[k]] = finite_or_string(r.worst[k]);
    regimes.push_back({{"regime", regime_name(r.regime)},
                       {"worst", worst},
                       {"worst_total", finite_or_string(r.worst_total)},
                       {"margin", finite_or_string(r.margin)}});
  }
  const auto& c = b.certificate;
  return {{"epsilon", b.epsilon},
          {"eta", b.eta},
          {"kappa", b.kappa},
          {"sigma", b.sigma},
          {"sigma_band", {finite_or_string(b.sigma_lo), finite_or_string(b.sigma_hi)}},
          {"sigma_in_band", b.sigma_in_band},
          {"theta", b.theta},
          {"gamma", b.gamma},
          {"lambda", finite_or_string(b.lambda)},
          {"omega_n", b.omega_n},
          {"experimental", b.experimental},
          {"certificate",
           {{"ok", c.ok()},
            {"budget", c.budget},
            {"quad_error", c.quad_error},
            {"probes", c.probes},
            {"eta_halvings", c.eta_halvings},
            {"kappa_halvings", c.kappa_halvings},
            {"c_com2", finite_or_string(c.c_com2)},
            {"kappa_cap", finite_or_string(c.kappa_cap)},
            {"regimes", regimes}}}};
}

json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"final_residual", finite_or_string(r.final_residual)},
          {"flag", r.flag_name()},
          {"tau", r.tau},
          {"history_length", r.residual_history.size()}};
}

json to_json(const IneqReport& r) {
  json w = json::array();
  for (double v : r.witness) w.push_back(finite_or_string(v));
  json j = {{"name", r.name},
            {"samples", r.samples},
            {"violations", r.violations},
            {"ok", r.ok()},
            {"worst_slack", finite_or_string(r.worst_slack)},
            {"witness", w}};
  if (r.ratio_bound > 0) {
    j["max_ratio"] = r.max_ratio;
    j["ratio_bound"] = r.ratio_bound;
  }
  return j;
}

json to_json(const IntegrabilityResult& r) {
  return {{"value", finite_or_string(r.value)},
          {"history", r.history},
          {"rel_change", finite_or_string(r.rel_change)},
          {"shells", r.shells},
          {"tail", finite_or_string(r.tail)}};
}

json to_json(const BoundCheck& c) {
  return {{"name", c.name},
          {"value", finite_or_string(c.value)},
          {"bound", finite_or_string(c.bound)},
          {"ok", c.ok},
          {"witness", to_json(c.witness)}};
}

json to_json(const HypothesisCheck& c) {
  return {{"name", c.name},
          {"ok", c.ok},
          {"value", finite_or_string(c.value)},
          {"bound", finite_or_string(c.bound)},
          {"error", finite_or_string(c.error)},
          {"witness", to_json(c.witness)}};
}

json to_json(const GrowthLemmaInstance& g) {
  json h = json::array();
  for (const auto& c : g.hypotheses) h.push_back(to_json(c));
  return {{"sigma", g.sigma},
          {"eta", g.eta},
          {"epsilon", g.epsilon},
          {"theta", g.theta},
          {"hypotheses", h},
          {"hypotheses_ok", g.hypotheses_ok()},
          {"conclusion_checked", g.conclusion_checked},
          {"conclusion_ok", g.conclusion_ok},
          {"sup_half", g.sup_half},
          {"margin", g.margin},
          {"operator_probes", g.operator_probes},
          {"probe_radius", g.probe_radius}};
}

json to_json(const HolderFit& f) {
  return {{"gamma_hat", f.gamma}, {"prefactor", f.prefactor}, {"fit_residual", f.residual}, {"radii", f.radii},
          {"osc", f.osc}};
}

json to_json(const OscillationTrace& t) {
  json levels = json::array();
  for (const auto& l : t.levels) {
    json b = json::array(), h = json::array();
    for (const auto& c : l.blowup) b.push_back(to_json(c));
    for (const auto& c : l.hypotheses) h.push_back(to_json(c));
    levels.push_back({{"level", l.level},
                      {"radius", l.radius},
                      {"b", l.b},
                      {"c", l.c},
                      {"sup", l.measured.sup},
                      {"inf", l.measured.inf},
                      {"osc", l.measured.osc},
                      {"bound", l.bound},
                      {"bound_ok", l.bound_ok},
                      {"envelope_consistent", l.envelope_consistent},
                      {"negated", l.negated},
                      {"sublevel", l.sublevel},
                      {"blowup", b},
                      {"hypotheses", h},
                      {"conclusion_ok", l.conclusion_ok},
                      {"conclusion_margin", l.conclusion_margin}});
  }
  return {{"center", to_json(t.center)},
          {"gamma", t.gamma},
          {"resolvable", t.resolvable},
          {"breakdown", t.breakdown},
          {"breakdown_level", t.breakdown_level},
          {"breakdown_reason", t.breakdown_reason},
          {"fitted_gamma", finite_or_string(t.fitted_gamma)},
          {"fit_residual", finite_or_string(t.fit_residual)},
          {"all_bounds_ok", t.all_bounds_ok()},
          {"levels", levels}};
}

CsvTable trace_table(const OscillationTrace& t) {
  CsvTable c;
  c.header = {"level", "radius", "sup", "inf", "osc", "bound", "b", "c"};
  for (const auto& l : t.levels)
    c.rows.push_back({double(l.level), l.radius, l.measured.sup, l.measured.inf, l.measured.osc, l.bound, l.b, l.c});
  return c;
}

CsvTable holder_table(const HolderFit& f, const std::vector<Oscillation>& osc) {
  CsvTable c;
  c.header = {"level", "radius", "sup", "inf", "osc", "bound"};
  for (std::size_t k = 0; k < f.radii.size(); ++k)
    c.rows.push_back({-std::log2(f.radii[k]), f.radii[k], osc[k].sup, osc[k].inf, osc[k].osc,
                      f.prefactor * std::pow(f.radii[k], f.gamma)});
  return c;
}

CsvTable residual_table(const SolveReport& r) {
  CsvTable c;
  c.header = {"iteration", "residual"};
  for (std::size_t k = 0; k < r.residual_history.size(); ++k) c.rows.push_back({double(k), r.residual_history[k]});
  return c;
}

}  // namespace nldp
