#pragma once

#include <functional>
#include <vector>

#include "nldp/grid_function.hpp"
#include "nldp/params.hpp"
#include "nldp/power.hpp"

namespace nldp {

struct QuadratureSpec {
  double rho_near = 0.0;  // 0 selects 4h
  double R_far = 0.0;     // 0 selects max(8R, 64)
  double tol = 1e-8;      // absolute target for O(1) values
  int ts_level = 7;
  bool enforce_margin = true;

  QuadratureSpec resolved(const GridFunction& u) const;
};

// Geometry hints for a field that is not necessarily a GridFunction.
struct FieldGeometry {
  int n = 1;
  bool has_box = false;
  Point lo, hi;          // kinks where rays cross the box faces
  double knot_h = 0.0;   // spline knot spacing (0: none)
  Point knot_lo;
  double sphere_radius = 0.0;  // kink on |y| = radius (truncated evaluation)
  double growth = 0.0;         // far-field growth exponent of the field
  double rho_near = 0.25;
  double R_far = 64.0;

  static FieldGeometry of(const GridFunction& u, const QuadratureSpec& Q);
};

using Field = std::function<double(const Point&)>;
// v(x + y) - v(x) = lin + rest with lin linear in y; false when unavailable.
using SplitFn = std::function<bool(const Point& x, const Point& y, double& lin, double& rest)>;

// phi_r(c - em) - phi_r(c + ep) without cancellation of the leading terms.
double pair_phi(double c, double ep, double em, double r);

// Symmetrized half sum of (u(x) - u(x +- y)) through the power map; with coeff the halves carry
// a(x, y) and a(x, -y).
template <class U>
double delta(const U& u, const Point& x, const Point& y, double r, const CoefficientField* coeff = nullptr) {
  if (!(r > 1.0)) throw InvalidArgument("delta: exponent must exceed 1");
  double u0 = u(x);
  Point yp = x + y, ym = x - y;
  double dp = power_map(u0 - u(yp), r), dm = power_map(u0 - u(ym), r);
  if (coeff) {
    dp *= (*coeff)(x, y);
    dm *= (*coeff)(x, Point(-y));
  }
  return 0.5 * dp + 0.5 * dm;
}

// Operator of an arbitrary field at x (no margin or interpolation checks). Without a split the
// singular panel is cut at a relative distance of 1e-7 to bound round-off.
Estimate evaluate_field(const Field& v, const Point& x, const ProblemParams& P, const FieldGeometry& geo,
                        double tol, int ts_level = 7, const SplitFn& split = {});

Estimate evaluate(const GridFunction& u, const Point& x, const ProblemParams& P, const QuadratureSpec& Q = {});

// Operator of the glued function (phi in B_rho(x0), u outside) at x0. A split for phi sharpens the
// singular panel.
Estimate evaluate_truncated(const GridFunction& u, const Field& phi, const Point& x0, double rho,
                            const ProblemParams& P, const QuadratureSpec& Q = {}, const SplitFn& phi_split = {});

// One-sided integral over |y| > eps without symmetrization.
Estimate evaluate_excluded(const Field& v, const Point& x, double eps, const ProblemParams& P,
                           const FieldGeometry& geo, double tol);

struct EnergyReport {
  double value = 0.0;
  double error = 0.0;
  bool divergent = false;
  double offending_scale = 0.0;
  bool exterior_self_omitted = false;
  std::vector<double> level_spacing;
  std::vector<double> level_values;
};

EnergyReport energy(const GridFunction& u, const ProblemParams& P, const QuadratureSpec& Q = {});

// Checks shared by evaluate and the solver.
void check_operator_preconditions(const GridFunction& u, const ProblemParams& P);

}  // namespace nldp
