#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nldp/constants.hpp"
#include "nldp/operator.hpp"
#include "nldp/scaling.hpp"
#include "nldp/solver.hpp"

namespace nldp {

struct Oscillation {
  double sup = 0.0;
  double inf = 0.0;
  double osc = 0.0;
};

// Extrema over grid nodes in the ball plus 1000 Halton probes through the interpolant (the
// exterior where the ball leaves the box).
Oscillation oscillation(const GridFunction& u, const Point& center, double radius, int probes = 1000);

struct HolderFit {
  double gamma = 0.0;      // slope of log osc against log radius
  double prefactor = 0.0;  // osc ~ prefactor r^gamma
  double residual = 0.0;   // rms of the log fit
  std::vector<double> radii, osc;
};

// Fit over radii 2^{-i}, i = i_min..i_max. Needs i_max - i_min >= 3 and 2^{-i_max} >= 4h;
// DegenerateFit when some oscillation sits at the round-off floor.
HolderFit holder_fit(const GridFunction& u, const Point& center, int i_min, int i_max);
HolderFit holder_fit(const std::vector<double>& radii, const std::vector<double>& osc, double floor = 0.0);

// h^n times the count of nodes in B_1 with u <= 0, cells straddling the sphere weighted 1/2.
double sublevel_measure(const GridFunction& u);

struct HypothesisCheck {
  std::string name;
  bool ok = false;
  double value = 0.0;  // worst measured quantity
  double bound = 0.0;
  double error = 0.0;  // quadrature error at the worst probe (operator check)
  Point witness;
};

struct GrowthLemmaInstance {
  GridFunction u;
  double sigma = 0, eta = 0, epsilon = 0, theta = 0;
  std::vector<HypothesisCheck> hypotheses;  // operator, sup in B_1, exterior growth, sublevel measure
  bool conclusion_checked = false;
  bool conclusion_ok = false;
  double sup_half = 0.0;  // sup over B_{1/2}
  double margin = 0.0;    // 1 - theta - sup_half
  int operator_probes = 0;
  double probe_radius = 0.0;

  bool hypotheses_ok() const;
  bool ok() const { return hypotheses_ok() && conclusion_ok; }
};

struct GrowthCheckOptions {
  int probes = 16;   // operator probes in B_1, plus the origin
  int shells = 8;    // exterior dyadic shells
  bool snap_to_nodes = true;  // move operator probes to the nearest grid node in B_1
  double conclusion_tol = 1e-12;
};

// Checks the four hypotheses and, when they all hold, the conclusion u <= 1 - theta in B_{1/2}.
// Operator probes count as verified when value + error <= sigma; HypothesisUnverifiable when the
// error exceeds |sigma - value| at a probe.
GrowthLemmaInstance growth_lemma_check(const GridFunction& u, const ConstantsBundle& bundle, const ProblemParams& P,
                                       const QuadratureSpec& Q = {}, const GrowthCheckOptions& opt = {});

struct LevelRecord {
  int level = 0;
  double radius = 0.0;
  double b = 0.0, c = 0.0;       // envelope after this level
  Oscillation measured;          // u_tilde over B_radius(x0)
  double bound = 0.0;            // 2^{-level gamma}
  bool bound_ok = true;
  bool envelope_consistent = true;
  bool negated = false;          // the level worked with -u_bar
  double sublevel = 0.0;         // measure of {u_bar <= 0} in B_1
  std::vector<BoundCheck> blowup;  // sup u, sup f, sup a, exterior envelope
  std::vector<HypothesisCheck> hypotheses;
  bool conclusion_ok = false;
  double conclusion_margin = 0.0;
};

struct OscillationTrace {
  Point center;
  double gamma = 0.0;
  std::vector<LevelRecord> levels;  // entry 0 is the base b_0 = inf, c_0 = b_0 + 1
  int resolvable = 0;               // levels with 2^{-i} >= 4h
  bool breakdown = false;
  int breakdown_level = -1;
  std::string breakdown_reason;
  double fitted_gamma = 0.0;
  double fit_residual = 0.0;

  std::vector<double> radii() const;
  std::vector<double> osc() const;
  bool all_bounds_ok() const;
};

struct DyadicOptions {
  double gamma = 0.0;   // 0: the bundle's gamma
  double M_bar = 0.0;   // 0: 2^{|q-p|} M of u_tilde's problem, widened for tq > sp
  QuadratureSpec quad;
  GrowthCheckOptions growth;
  bool strict = false;  // throw IterationBreakdown instead of returning a partial trace
};

// Induction b_i <= u_tilde <= c_i on B_{2^{-i}}(x0), c_i - b_i <= 2^{-i gamma}, levels 1..levels
// (capped at the resolvable ones). u_tilde is expected to have oscillation <= 1 over R^n.
OscillationTrace dyadic_iteration(const GridFunction& u_tilde, const Point& x0, const ConstantsBundle& bundle,
                                  const ProblemParams& P_tilde, int levels, const DyadicOptions& opt = {});

struct PipelineOptions {
  double epsilon = 0.0;  // 0: |B_1| / 2
  int levels = 5;
  Point x0;              // empty: origin
  SelectionOptions selection;
  DyadicOptions dyadic;
};

struct PipelineResult {
  GridFunction u;
  SolveReport solve;
  ConstantsBundle bundle;
  double u_sup = 0.0;
  GridFunction u_tilde;
  ProblemParams P_tilde;
  OscillationTrace trace;
};

// solve -> constants -> normalization by lambda -> dyadic iteration.
PipelineResult run_pipeline(const ProblemParams& P, const SolveConfig& cfg, const PipelineOptions& opt = {});

// sup |u| over R^n from node values and the declared exterior bounds.
double sup_norm(const GridFunction& u);
GridFunction negated(const GridFunction& u);

}  // namespace nldp
