#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nldp/quadrature.hpp"

namespace nldp {

using Pair = Eigen::Array2d;  // (p-phase, q-phase) parts of an integrand

struct RaySpec {
  double r_lo = 0.0;
  double r_hi = std::numeric_limits<double>::infinity();
  bool singular_lo = true;  // integrand algebraically singular at r_lo = 0
  std::vector<double> breaks;
  double R_far = 64.0;     // mapped tail starts here when r_hi is infinite
  double e_p = 1.0;        // tail decay r^{-1-e} of each component
  double e_q = 1.0;
  double tol = 1e-10;
  int ts_level = 7;
  double min_first = 0.0;  // breaks closer than this to r_lo do not end the singular panel
  double dmin_rel = 1e-60;  // singular panel cut-off relative to its length
};

// Integral over one ray of a Pair-valued radial integrand (the r^{n-1} factor included by F).
template <class F>
quad::Integral<Pair> integrate_ray(F&& f, const RaySpec& s) {
  quad::Integral<Pair> out{Pair::Zero(), 0.0, 0};
  if (!(s.r_hi > s.r_lo)) return out;
  std::vector<double> br;
  for (double b : s.breaks)
    if (b > s.r_lo && b < s.r_hi && std::isfinite(b)) br.push_back(b);
  std::sort(br.begin(), br.end());
  const double finite_end = std::isfinite(s.r_hi) ? s.r_hi : std::max(s.R_far, s.r_lo);
  double start = s.r_lo;
  const double tol = s.tol / 3.0;
  if (s.singular_lo) {
    double d1 = finite_end;
    for (double b : br)
      if (b > s.r_lo + s.min_first && b < finite_end) {
        d1 = b;
        break;
      }
    auto I = quad::tanh_sinh<Pair>(f, s.r_lo, d1 - s.r_lo, tol, s.ts_level, s.dmin_rel);
    out.value += I.value;
    out.error += I.error;
    out.evals += I.evals;
    start = d1;
  }
  if (finite_end > start) {
    std::vector<double> pts{start, finite_end};
    for (double b : br)
      if (b > start && b < finite_end) pts.push_back(b);
    auto I = quad::adaptive<Pair>(f, pts, tol);
    out.value += I.value;
    out.error += I.error;
    out.evals += I.evals;
  }
  if (!std::isfinite(s.r_hi)) {
    const double A = finite_end;
    if (s.e_p == s.e_q) {
      auto I = quad::tail<Pair>(f, A, s.e_p, tol);
      out.value += I.value;
      out.error += I.error;
      out.evals += I.evals;
    } else {
      auto fp = [&](double r) { return f(r)(0); };
      auto fq = [&](double r) { return f(r)(1); };
      auto Ip = quad::tail<double>(fp, A, s.e_p, tol / 2);
      auto Iq = quad::tail<double>(fq, A, s.e_q, tol / 2);
      out.value += Pair(Ip.value, Iq.value);
      out.error += Ip.error + Iq.error;
      out.evals += Ip.evals + Iq.evals;
    }
  }
  return out;
}

// Sum over directions: n = 1 uses omega = +1 (and -1 unless half), n = 2 integrates the angle over
// [0, pi) (half) or [0, 2 pi) with adaptive panels split at angle_breaks.
template <class RayFn>
quad::Integral<Pair> integrate_sphere(int n, RayFn&& ray, bool half, std::vector<double> angle_breaks,
                                      double tol) {
  if (n == 1) {
    auto I = ray(point(1.0));
    if (!half) {
      auto J = ray(point(-1.0));
      I.value += J.value;
      I.error += J.error;
      I.evals += J.evals;
    }
    return I;
  }
  const double top = half ? M_PI : 2.0 * M_PI;
  double inner_err = 0.0;
  long inner_evals = 0;
  auto g = [&](double th) -> Pair {
    auto I = ray(point(std::cos(th), std::sin(th)));
    inner_err = std::max(inner_err, I.error);
    inner_evals += I.evals;
    return I.value;
  };
  std::vector<double> pts{0.0, top};
  for (double a : angle_breaks) {
    double b = std::fmod(a, top);
    if (b < 0) b += top;
    if (b > 1e-12 && b < top - 1e-12) pts.push_back(b);
  }
  // Extra uniform splits keep the first pass from missing narrow angular features.
  for (int k = 1; k < 8; ++k) pts.push_back(top * k / 8.0);
  auto I = quad::adaptive<Pair>(g, pts, tol / 2, 400);
  I.error += top * inner_err;
  I.evals = inner_evals;
  return I;
}

// Distance along x + r*omega (r > 0) to the exit of the axis-aligned box [lo, hi]; x inside.
inline double box_exit(const Point& x, const Point& omega, const Point& lo, const Point& hi) {
  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (omega(d) > 1e-300)
      r = std::min(r, (hi(d) - x(d)) / omega(d));
    else if (omega(d) < -1e-300)
      r = std::min(r, (lo(d) - x(d)) / omega(d));
  }
  return std::max(r, 0.0);
}

// Entry distance into the box for x outside (or 0 if inside); inf if the ray misses.
inline double box_entry(const Point& x, const Point& omega, const Point& lo, const Point& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    if (std::abs(omega(d)) < 1e-300) {
      if (x(d) < lo(d) || x(d) > hi(d)) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (lo(d) - x(d)) / omega(d), b = (hi(d) - x(d)) / omega(d);
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

// Distance along x + r*omega to the unit-ball boundary from x inside the ball.
inline double ball_exit(const Point& x, const Point& omega, double radius = 1.0) {
  double b = x.dot(omega), c = x.squaredNorm() - radius * radius;
  return -b + std::sqrt(std::max(0.0, b * b - c));
}

}  // namespace nldp
