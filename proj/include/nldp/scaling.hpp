#pragma once

#include <string>

#include "nldp/grid_function.hpp"
#include "nldp/operator.hpp"
#include "nldp/params.hpp"

namespace nldp {

// u -> lambda (u(mu x + x0) - m). Blow-up contexts also record the dyadic level j and exponent gamma.
struct ScalingContext {
  double lambda = 1.0;
  double mu = 1.0;
  Point x0;
  int j = 0;
  double gamma = 0.0;
  double m = 0.0;

  static ScalingContext identity(int n);
  static ScalingContext rescale(double lambda, double mu, Point x0);
  // lambda = 2^{gamma j + 1}, mu = 2^{-j}
  static ScalingContext blowup(int j, double gamma, double m, Point x0);

  void validate(int n) const;
  bool is_identity() const;
  // Context of applying this, then `after`.
  ScalingContext then(const ScalingContext& after) const;
};

// Kernels mu^{n+sp} K(mu x + x0, mu y), coefficient lambda^{p-q} mu^{sp-tq} a(mu x + x0, mu y),
// source lambda^{p-1} mu^{sp} f(mu x + x0). c_hat is carried unchanged.
ProblemParams rescale_problem(const ProblemParams& P, const ScalingContext& ctx);
double coefficient_factor(const Exponents& e, const ScalingContext& ctx);
double source_factor(const Exponents& e, const ScalingContext& ctx);

struct ScalingCheck {
  double max_rel = 0.0;
  std::vector<Point> probes;
  std::vector<double> lhs, rhs;
};

// Compares the operator of the transformed function under the transformed problem with
// lambda^{p-1} mu^{sp} times the original operator at mu x + x0, at `probes` points.
ScalingCheck scaling_identity_check(const GridFunction& u, const ProblemParams& P, const ScalingContext& ctx,
                                    const QuadratureSpec& Q = {}, int probes = 8);

struct BlowupBounds {
  double sigma = 0.0;  // bound on the rescaled source in B_1
  double M_bar = 0.0;  // bound on the rescaled coefficient
  double eta = 0.0;    // exterior envelope 2|2y|^eta - 1
};

struct BoundCheck {
  std::string name;
  double value = 0.0;  // measured quantity (largest excess for the envelope)
  double bound = 0.0;
  bool ok = true;
  Point witness;
};

struct BlowupReport {
  GridFunction u_bar;
  ProblemParams P_bar;
  ScalingContext ctx;
  BoundCheck sup_u, sup_f, sup_a, envelope;
  bool ok() const { return sup_u.ok && sup_f.ok && sup_a.ok && envelope.ok; }
};

// Largest u(y) - (2|2y|^eta - 1) over probes on the dyadic shells 2^l <= |y| < 2^{l+1}, l < shells.
BoundCheck exterior_envelope_check(const GridFunction& u, double eta, int shells);

// u_bar(x) = 2^{gamma j + 1} (u_tilde(2^{-j} x + x0) - m), the grid re-indexed exactly. Throws
// InductionViolation on the first failed bound unless strict is false.
BlowupReport blowup_step(const GridFunction& u_tilde, int j, double gamma, double m, const Point& x0,
                         const ProblemParams& P_tilde, const BlowupBounds& bounds, bool strict = true);

}  // namespace nldp
