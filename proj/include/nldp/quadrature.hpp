#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <type_traits>
#include <vector>

#include "nldp/types.hpp"

namespace nldp::quad {

template <class V>
struct Integral {
  V value;
  double error = 0.0;
  long evals = 0;
};

template <class V>
inline V zero() {
  if constexpr (std::is_arithmetic_v<V>)
    return V(0);
  else
    return V::Zero();
}

inline double norm1(double v) { return std::abs(v); }
template <class Derived>
inline double norm1(const Eigen::ArrayBase<Derived>& v) {
  return v.abs().sum();
}

template <class V>
inline bool finite(const V& v) {
  if constexpr (std::is_arithmetic_v<V>)
    return std::isfinite(v);
  else
    return v.allFinite();
}

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre on [-1, 1].
const Rule& gauss_legendre(int n);

// Fixed tanh-sinh rule on [0, 1] with the singular end at 0; nodes closer than dmin to 0 are
// dropped.
Rule tanh_sinh_rule(int level, double dmin);

namespace detail {
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace detail

template <class V, class F>
inline Integral<V> gk15(F& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  V fc = f(c);
  V resk = fc * detail::wgk[7];
  V resg = fc * detail::wg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * detail::xgk[j];
    V f1 = f(c - dx), f2 = f(c + dx);
    V s = f1 + f2;
    resk += s * detail::wgk[j];
    if (j % 2 == 1) resg += s * detail::wg[j / 2];
  }
  Integral<V> r{resk * h, norm1(V((resk - resg) * h)), 15};
  return r;
}

// Globally adaptive Gauss-Kronrod over consecutive breakpoints.
template <class V, class F>
Integral<V> adaptive(F&& f, std::vector<double> pts, double tol_abs, int max_intervals = 4000) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  struct Piece {
    double a, b;
    Integral<V> I;
    bool operator<(const Piece& o) const { return I.error < o.I.error; }
  };
  std::priority_queue<Piece> heap;
  Integral<V> total{zero<V>(), 0.0, 0};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    auto I = gk15<V>(f, pts[i], pts[i + 1]);
    total.value += I.value;
    total.error += I.error;
    total.evals += I.evals;
    heap.push({pts[i], pts[i + 1], I});
  }
  int count = static_cast<int>(heap.size());
  while (total.error > tol_abs && !heap.empty() && count < max_intervals) {
    Piece pc = heap.top();
    double m = 0.5 * (pc.a + pc.b);
    if (!(m > pc.a && m < pc.b) || (pc.b - pc.a) < 1e-15 * std::max(1.0, std::abs(pc.a))) break;
    heap.pop();
    auto L = gk15<V>(f, pc.a, m), R = gk15<V>(f, m, pc.b);
    total.value += L.value + R.value - pc.I.value;
    total.error += L.error + R.error - pc.I.error;
    total.evals += 30;
    heap.push({pc.a, m, L});
    heap.push({m, pc.b, R});
    ++count;
  }
  // Recompute sums to avoid drift from repeated updates.
  V v = zero<V>();
  double e = 0.0;
  while (!heap.empty()) {
    v += heap.top().I.value;
    e += heap.top().I.error;
    heap.pop();
  }
  total.value = v;
  total.error = e;
  return total;
}

// Integral of f over [a, a + L] where f may be algebraically singular at a. Nodes below
// dmin * L are replaced by a power-law remainder fitted at dmin and 2 dmin.
template <class V, class F>
Integral<V> tanh_sinh(F&& f, double a, double L, double tol_abs, int max_level = 7,
                      double dmin_rel = 1e-200) {
  Integral<V> out{zero<V>(), 0.0, 0};
  if (!(L > 0)) return out;
  const double dmin = dmin_rel * L;
  auto node = [&](double t, double& d_left, double& d_right, double& w) {
    double u = 0.5 * std::numbers::pi * std::sinh(t);
    double e = std::exp(-2.0 * std::abs(u));
    double small = L * e / (1.0 + e);  // distance to the nearer end
    if (t < 0) {
      d_left = small;
      d_right = L - small;
    } else {
      d_right = small;
      d_left = L - small;
    }
    double ch = std::cosh(u);
    w = 0.5 * L * 0.5 * std::numbers::pi * std::cosh(t) / (ch * ch);
  };
  auto sum_level = [&](double h, bool odd_only) {
    V s = zero<V>();
    for (int sgn : {-1, 1}) {
      for (int k = (odd_only ? 1 : (sgn < 0 ? 1 : 0));; k += (odd_only ? 2 : 1)) {
        double t = sgn * k * h;
        double dl, dr, w;
        node(t, dl, dr, w);
        if (sgn < 0 && dl < dmin) break;
        if (sgn > 0 && dr < 1e-16 * L) break;
        if (w < 1e-300) break;
        V fv = f(a + dl);
        ++out.evals;
        if (!finite(fv)) continue;
        s += fv * w;
        if (k * h > 7.0) break;
      }
    }
    return s;
  };
  double h = 1.0;
  V S = sum_level(h, false);
  V I = S * h;
  V prev = I;
  double err = 1e300;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    S += sum_level(h, true);
    I = S * h;
    err = norm1(V(I - prev));
    prev = I;
    if (level >= 3 && err <= 0.1 * tol_abs) break;
  }
  // Remainder on (0, dmin): f ~ c d^alpha.
  V f1 = f(a + dmin), f2 = f(a + 2 * dmin), f4 = f(a + 4 * dmin);
  out.evals += 3;
  V rem = zero<V>();
  double rem_err = 0.0;
  auto one = [&](double g1, double g2, double g4, double& r, double& re) {
    r = 0.0;
    re = 0.0;
    if (g1 == 0.0) return;
    if (g1 * g2 > 0 && g2 * g4 > 0) {
      double al = std::log2(g2 / g1), al2 = std::log2(g4 / g2);
      if (al > -1.0 && al2 > -1.0) {
        r = g1 * dmin / (al + 1.0);
        re = std::abs(r - g1 * dmin / (al2 + 1.0));
        return;
      }
    }
    r = g1 * dmin;
    re = std::abs(g1) * dmin + std::abs(g2) * dmin;
  };
  if constexpr (std::is_arithmetic_v<V>) {
    double r, re;
    one(f1, f2, f4, r, re);
    rem = r;
    rem_err = re;
  } else {
    for (Eigen::Index i = 0; i < rem.size(); ++i) {
      double r, re;
      one(f1(i), f2(i), f4(i), r, re);
      rem(i) = r;
      rem_err += re;
    }
  }
  out.value = I + rem;
  out.error = err + rem_err;
  return out;
}

// Integral of f over [A, inf) for f(r) ~ r^{-1-e} times slow growth, via r = A w^{-1/e}.
template <class V, class F>
Integral<V> tail(F&& f, double A, double e, double tol_abs, int max_level = 7) {
  auto g = [&](double w) -> V {
    double r = A * std::pow(w, -1.0 / e);
    return f(r) * ((A / e) * std::pow(w, -1.0 - 1.0 / e));
  };
  return tanh_sinh<V>(g, 0.0, 1.0, tol_abs, max_level, 1e-14);
}

}  // namespace nldp::quad
