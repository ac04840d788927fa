#include "nldp/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nldp/probes.hpp"
#include "nldp/rays.hpp"

namespace nldp {

QuadratureSpec QuadratureSpec::resolved(const GridFunction& u) const {
  QuadratureSpec q = *this;
  if (!(q.rho_near > 0)) q.rho_near = 4.0 * u.h();
  if (!(q.R_far > 0)) q.R_far = std::max(8.0 * u.half_width(), 64.0);
  if (!(q.rho_near < q.R_far)) throw InvalidArgument("quadrature: rho_near must be below R_far");
  if (!(q.tol > 0)) throw InvalidArgument("quadrature: tol must be positive");
  return q;
}

FieldGeometry FieldGeometry::of(const GridFunction& u, const QuadratureSpec& Q) {
  FieldGeometry g;
  g.n = u.dim();
  g.has_box = true;
  g.lo = u.lo();
  g.hi = u.hi();
  g.knot_h = u.h();
  g.knot_lo = u.lo();
  g.growth = u.exterior().growth;
  auto q = Q.resolved(u);
  g.rho_near = q.rho_near;
  g.R_far = std::max(q.R_far, 2.0 * (u.center().norm() + u.half_width() * std::sqrt(double(u.dim()))));
  return g;
}

namespace {

// Positive distances t where x + t*dir crosses a box face.
void box_crossings(const Point& x, const Point& dir, const Point& lo, const Point& hi, std::vector<double>& out) {
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (std::abs(dir(d)) < 1e-300) {
      if (x(d) < lo(d) || x(d) > hi(d)) return;
      continue;
    }
    double a = (lo(d) - x(d)) / dir(d), b = (hi(d) - x(d)) / dir(d);
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return;
  if (t0 > 0) out.push_back(t0);
  if (t1 > 0 && std::isfinite(t1)) out.push_back(t1);
}

void knot_crossings(const Point& x, const Point& dir, const FieldGeometry& g, double rmax, std::vector<double>& out) {
  if (!(g.knot_h > 0)) return;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    double c = dir(d);
    if (std::abs(c) < 1e-12) continue;
    double s = (x(d) - g.knot_lo(d)) / g.knot_h;
    long k = c > 0 ? static_cast<long>(std::floor(s)) + 1 : static_cast<long>(std::ceil(s)) - 1;
    for (int it = 0; it < 64; ++it, k += (c > 0 ? 1 : -1)) {
      double r = (g.knot_lo(d) + k * g.knot_h - x(d)) / c;
      if (r > rmax) break;
      if (r > 0) out.push_back(r);
    }
  }
}

std::vector<double> corner_angles(const Point& x, const FieldGeometry& g) {
  std::vector<double> a;
  if (g.n != 2 || !g.has_box) return a;
  for (int i = 0; i < 4; ++i) {
    double cx = (i & 1) ? g.hi(0) : g.lo(0), cy = (i & 2) ? g.hi(1) : g.lo(1);
    double dx = cx - x(0), dy = cy - x(1);
    if (dx * dx + dy * dy > 0) a.push_back(std::atan2(dy, dx));
  }
  return a;
}

}  // namespace

void check_operator_preconditions(const GridFunction& u, const ProblemParams& P) {
  P.validate();
  const auto& e = P.exponents;
  if (u.dim() != e.n) throw InvalidArgument("grid dimension does not match n");
  if (u.interp() == Interp::linear && !(e.p > 1.0 / (1.0 - e.s)))
    throw NonIntegrableNearField("linear interpolation needs p > 1/(1-s)");
  double g = u.exterior().growth;
  if (g > 0) {
    bool bad = g * (e.p - 1.0) >= e.s * e.p;
    if (P.q_phase()) bad = bad || g * (e.q - 1.0) >= e.t * e.q;
    if (bad) throw TailDivergence("exterior growth exponent exceeds min{sp/(p-1), tq/(q-1)}");
  }
}

double pair_phi(double c, double ep, double em, double r) {
  if (r == 2.0) return -(ep + em);
  if (c != 0.0) {
    double z = ep / c, w = em / c;
    if (std::abs(z) < 0.5 && std::abs(w) < 0.5) {
      double g = std::expm1((r - 1.0) * std::log1p(z)) - std::expm1((r - 1.0) * std::log1p(-w));
      return -std::pow(std::abs(c), r - 2.0) * c * g;
    }
  }
  return power_map(c - em, r) - power_map(c + ep, r);
}

Estimate evaluate_field(const Field& v, const Point& x, const ProblemParams& P, const FieldGeometry& geo,
                        double tol, int ts_level, const SplitFn& split) {
  const auto& e = P.exponents;
  const int n = e.n;
  const double p = e.p, q = e.q;
  const bool qa = P.q_phase();
  const double v0 = v(x);
  auto ray = [&](const Point& om) {
    RaySpec s;
    s.R_far = geo.R_far;
    s.e_p = e.s * p;
    s.e_q = qa ? e.t * q : s.e_p;
    s.tol = tol / (n == 1 ? 1.0 : 2.0);
    s.ts_level = ts_level;
    s.breaks.push_back(geo.rho_near);
    if (geo.has_box) {
      box_crossings(x, om, geo.lo, geo.hi, s.breaks);
      box_crossings(x, Point(-om), geo.lo, geo.hi, s.breaks);
    }
    knot_crossings(x, om, geo, geo.rho_near, s.breaks);
    knot_crossings(x, Point(-om), geo, geo.rho_near, s.breaks);
    if (geo.sphere_radius > 0) s.breaks.push_back(geo.sphere_radius);
    if (qa) {
      P.a.ray_breaks(x, om, geo.R_far, s.breaks);
      P.a.ray_breaks(x, Point(-om), geo.R_far, s.breaks);
    }
    s.min_first = geo.knot_h > 0 ? 1e-3 * geo.knot_h : 0.0;
    double d1 = 0.0;
    if (split) {
      d1 = std::numeric_limits<double>::infinity();
      for (double b : s.breaks)
        if (b > s.min_first) d1 = std::min(d1, b);
    } else {
      s.dmin_rel = 1e-7;
    }
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      Point my = -y;
      double jac = n == 2 ? r : 1.0;
      double kp = P.Ksp(x, y);
      double lin, ep, lm, em;
      if (r <= d1 && split(x, y, lin, ep) && split(x, my, lm, em)) {
        // v0 - v(x + y) = -(lin + ep), v0 - v(x - y) = lin - em
        double sp_part = pair_phi(lin, ep, em, p) * kp * jac;
        double sq_part = 0.0;
        if (qa) {
          double ap = P.a(x, y), am = P.a(x, my);
          double t = am * pair_phi(lin, ep, em, q);
          if (ap != am) t += (ap - am) * power_map(-(lin + ep), q);
          sq_part = t * P.Ktq(x, y) * P.c_hat * jac;
        }
        return Pair(sp_part, sq_part);
      }
      double vp = v(x + y), vm = v(x - y);
      double sp_part = (power_map(v0 - vp, p) + power_map(v0 - vm, p)) * kp * jac;
      double sq_part = 0.0;
      if (qa) {
        double kq = P.Ktq(x, y);
        sq_part = (P.a(x, y) * power_map(v0 - vp, q) + P.a(x, my) * power_map(v0 - vm, q)) * kq * P.c_hat * jac;
      }
      return Pair(sp_part, sq_part);
    };
    return integrate_ray(F, s);
  };
  auto I = integrate_sphere(n, ray, true, corner_angles(x, geo), tol);
  return {I.value.sum(), I.error};
}

Estimate evaluate(const GridFunction& u, const Point& x, const ProblemParams& P, const QuadratureSpec& Q) {
  check_operator_preconditions(u, P);
  auto q = Q.resolved(u);
  if (q.enforce_margin && u.boundary_distance(x) < q.rho_near * (1 - 1e-12))
    throw InvalidArgument("evaluation point lies within rho_near of the box boundary");
  auto geo = FieldGeometry::of(u, q);
  Field v = [&u](const Point& z) { return u(z); };
  SplitFn sp = [&u](const Point& a, const Point& y, double& l, double& r) { return u.split(a, y, l, r); };
  return evaluate_field(v, x, P, geo, q.tol, q.ts_level, sp);
}

Estimate evaluate_truncated(const GridFunction& u, const Field& phi, const Point& x0, double rho,
                            const ProblemParams& P, const QuadratureSpec& Q, const SplitFn& phi_split) {
  check_operator_preconditions(u, P);
  if (!(rho > 0)) throw InvalidArgument("truncated evaluation: rho must be positive");
  if (std::abs(phi(x0) - u(x0)) > 1e-10) throw InvalidArgument("truncated evaluation: phi(x0) != u(x0)");
  auto q = Q.resolved(u);
  if (q.enforce_margin && u.boundary_distance(x0) < q.rho_near * (1 - 1e-12))
    throw InvalidArgument("evaluation point lies within rho_near of the box boundary");
  const int n = u.dim();
  auto check = [&](const Point& z) {
    if ((z - x0).norm() >= rho) return;
    if (phi(z) < u(z) - 1e-10) throw TouchViolation("phi drops below u inside B_rho(x0)");
  };
  for (Eigen::Index k = 0; k < u.size(); ++k) check(u.node(k));
  for (const auto& z : halton_ball(n, 1000, rho, x0)) check(z);
  auto geo = FieldGeometry::of(u, q);
  geo.sphere_radius = rho;
  Field v = [&](const Point& z) { return (z - x0).norm() < rho ? phi(z) : u(z); };
  SplitFn sp;
  if (phi_split)
    sp = [&](const Point& a, const Point& y, double& l, double& r) { return y.norm() < rho && phi_split(a, y, l, r); };
  return evaluate_field(v, x0, P, geo, q.tol, q.ts_level, sp);
}

Estimate evaluate_excluded(const Field& v, const Point& x, double eps, const ProblemParams& P,
                           const FieldGeometry& geo, double tol) {
  const auto& e = P.exponents;
  const int n = e.n;
  const bool qa = P.q_phase();
  const double v0 = v(x);
  auto ray = [&](const Point& om) {
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      double d = v0 - v(x + y);
      double jac = n == 2 ? r : 1.0;
      double a = power_map(d, e.p) * P.Ksp(x, y) * jac;
      double b = qa ? P.c_hat * P.a(x, y) * power_map(d, e.q) * P.Ktq(x, y) * jac : 0.0;
      return Pair(a, b);
    };
    RaySpec s;
    s.r_lo = eps;
    s.singular_lo = false;
    s.R_far = std::max(geo.R_far, 2 * eps);
    s.e_p = e.s * e.p;
    s.e_q = qa ? e.t * e.q : s.e_p;
    s.tol = tol / 2;
    if (geo.has_box) box_crossings(x, om, geo.lo, geo.hi, s.breaks);
    knot_crossings(x, om, geo, geo.rho_near, s.breaks);
    return integrate_ray(F, s);
  };
  auto I = integrate_sphere(n, ray, false, corner_angles(x, geo), tol);
  return {I.value.sum(), I.error};
}

namespace {

GridFunction subsample(const GridFunction& u, int stride) {
  const int N = u.nodes_per_axis();
  const int Nc = (N - 1) / stride + 1;
  const int n = u.dim();
  Eigen::VectorXd v(n == 1 ? Nc : Nc * Nc);
  for (int j = 0; j < (n == 1 ? 1 : Nc); ++j)
    for (int i = 0; i < Nc; ++i) v(i + Nc * j) = u.values()(u.index(i * stride, j * stride));
  return GridFunction(n, u.lo(), u.h() * stride, Nc, std::move(v), u.exterior(), u.interp());
}

// Energy density at z in the box: partners everywhere, plus the mirrored contribution of exterior
// points x = z + y paired with z (coefficient a(x, -y)).
Estimate energy_density(const GridFunction& u, const Point& z, const ProblemParams& P, double tol,
                        double R_far) {
  const auto& e = P.exponents;
  const int n = e.n;
  const bool qa = P.q_phase();
  const double u0 = u(z);
  const Point lo = u.lo(), hi = u.hi();
  FieldGeometry geo;
  geo.n = n;
  geo.has_box = true;
  geo.lo = lo;
  geo.hi = hi;
  geo.knot_h = u.h();
  geo.knot_lo = lo;
  const double esp = e.s * e.p, etq = e.t * e.q;
  auto ray = [&](const Point& om) {
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      double d = u0 - u(z + y);
      double jac = n == 2 ? r : 1.0;
      double a = abs_pow(d, e.p) * std::pow(r, -n - esp) * jac;
      double b = qa ? P.a(z, y) * abs_pow(d, e.q) * std::pow(r, -n - etq) * jac : 0.0;
      return Pair(a, b);
    };
    RaySpec s;
    s.R_far = R_far;
    s.e_p = esp;
    s.e_q = qa ? etq : esp;
    s.tol = tol / 4;
    box_crossings(z, om, lo, hi, s.breaks);
    knot_crossings(z, om, geo, 4 * u.h(), s.breaks);
    s.min_first = 1e-3 * u.h();
    auto I = integrate_ray(F, s);
    auto G = [&](double r) -> Pair {
      Point y = r * om;
      Point xo = z + y;
      double d = u.exterior()(xo) - u0;
      double jac = n == 2 ? r : 1.0;
      double a = abs_pow(d, e.p) * std::pow(r, -n - esp) * jac;
      double b = qa ? P.a(xo, Point(-y)) * abs_pow(d, e.q) * std::pow(r, -n - etq) * jac : 0.0;
      return Pair(a, b);
    };
    RaySpec t;
    t.r_lo = box_exit(z, om, lo, hi);
    t.singular_lo = false;
    t.R_far = std::max(R_far, 2 * t.r_lo);
    t.e_p = s.e_p;
    t.e_q = s.e_q;
    t.tol = tol / 4;
    auto J = integrate_ray(G, t);
    I.value += J.value;
    I.error += J.error;
    I.evals += J.evals;
    return I;
  };
  std::vector<double> ang;
  if (n == 2)
    for (int i = 0; i < 4; ++i) {
      double cx = (i & 1) ? hi(0) : lo(0), cy = (i & 2) ? hi(1) : lo(1);
      ang.push_back(std::atan2(cy - z(1), cx - z(0)));
    }
  auto I = integrate_sphere(n, ray, false, ang, tol);
  return {I.value.sum(), I.error};
}

Estimate box_energy(const GridFunction& u, const ProblemParams& P, double tol, double R_far) {
  const int n = u.dim();
  const int N = u.nodes_per_axis();
  const int G = n == 1 ? 3 : 2;
  const auto& rule = quad::gauss_legendre(G);
  const double h = u.h();
  const int cells = N - 1;
  const long total = n == 1 ? cells : static_cast<long>(cells) * cells;
  double val = 0.0, err = 0.0;
#pragma omp parallel for reduction(+ : val, err) schedule(dynamic)
  for (long c = 0; c < total; ++c) {
    int ci = static_cast<int>(c % cells), cj = static_cast<int>(c / cells);
    for (int a = 0; a < G; ++a)
      for (int b = 0; b < (n == 1 ? 1 : G); ++b) {
        Point z(n);
        z(0) = u.lo()(0) + h * (ci + 0.5 * (1 + rule.x[a]));
        double w = 0.5 * h * rule.w[a];
        if (n == 2) {
          z(1) = u.lo()(1) + h * (cj + 0.5 * (1 + rule.x[b]));
          w *= 0.5 * h * rule.w[b];
        }
        auto d = energy_density(u, z, P, tol, R_far);
        val += w * d.value;
        err += w * d.error;
      }
  }
  return {val, err};
}

}  // namespace

EnergyReport energy(const GridFunction& u, const ProblemParams& P, const QuadratureSpec& Q) {
  P.validate();
  EnergyReport rep;
  auto q = Q.resolved(u);
  const int N = u.nodes_per_axis();
  int levels = 0;
  while (levels < 4 && (N - 1) % (1 << (levels + 1)) == 0 && (N - 1) / (1 << (levels + 1)) + 1 >= 8) ++levels;
  rep.exterior_self_omitted = !u.exterior().is_constant;
  double qerr = 0.0;
  for (int l = levels; l >= 0; --l) {
    GridFunction c = l == 0 ? u : subsample(u, 1 << l);
    auto E = box_energy(c, P, q.tol, q.R_far);
    rep.level_spacing.push_back(c.h());
    rep.level_values.push_back(E.value);
    qerr = E.error;
  }
  const auto& v = rep.level_values;
  rep.value = v.back();
  rep.error = qerr;
  if (v.size() >= 2) rep.error += std::abs(v[v.size() - 1] - v[v.size() - 2]);
  // Cauchy test: increments must shrink; three successive failures flag divergence.
  int fails = 0;
  for (std::size_t k = 2; k < v.size(); ++k) {
    double d_prev = std::abs(v[k - 1] - v[k - 2]), d = std::abs(v[k] - v[k - 1]);
    if (d > 0.75 * d_prev && d > 1e-12 * std::abs(v[k])) {
      if (++fails >= 3) {
        rep.divergent = true;
        rep.offending_scale = rep.level_spacing[k];
      }
    } else {
      fails = 0;
    }
  }
  if (rep.divergent) {
    rep.value = std::numeric_limits<double>::infinity();
    rep.error = std::numeric_limits<double>::infinity();
  }
  return rep;
}

}  // namespace nldp
