#include "nldp/inequalities.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nldp/power.hpp"
#include "nldp/probes.hpp"
#include "nldp/quadrature.hpp"

namespace nldp {

namespace {

using ld = long double;

constexpr double kScalarTol = 64.0 * LDBL_EPSILON;
constexpr double kC2Tol = 1e-12;

struct Sample {
  double slack = 0.0;
  double scale = 0.0;
  double ratio = -1.0;
  std::vector<double> in;
};

Sample revL1(double a, double b, double r) {
  if (!(r >= 2.0)) throw InvalidArgument("revL1: r must be >= 2");
  ld A = a, B = b, R = r;
  ld s = power_map(A + B, R), t = power_map(A, R);
  ld lhs = std::abs(s - t);
  ld rhs = (R - 1) * std::abs(B) * std::pow(std::abs(A) + std::abs(B), R - 2);
  return {static_cast<double>(rhs - lhs), static_cast<double>(std::abs(s) + std::abs(t) + rhs), -1.0, {a, b, r}};
}

Sample superlinear(double a, double b, double r, double q) {
  if (!(r >= 2.0 && q >= r)) throw InvalidArgument("superlinear: need q >= r >= 2");
  ld A = a, B = b, R = r;
  if (A + B < 0) throw InvalidArgument("superlinear: need a + b >= 0");
  ld c = std::exp2(static_cast<ld>(q) - 2);
  ld lhs = power_map(A + B, R), pa = power_map(A, R), pb = power_map(B, R);
  ld rhs = c * (pa + pb);
  return {static_cast<double>(rhs - lhs), static_cast<double>(std::abs(lhs) + c * (std::abs(pa) + std::abs(pb))),
          -1.0, {a, b, r, q}};
}

ld singular_constant(ld q) { return std::pow(ld(3), q - 1) + std::pow(ld(2), q - 1); }

Sample singular(double a, double b, double r, double q) {
  if (!(r > 1.0 && r <= 2.0)) throw InvalidArgument("singular: need 1 < r <= 2");
  if (!(q >= r)) throw InvalidArgument("singular: need q >= r");
  ld A = a, B = b, R = r;
  ld s = power_map(A + B, R), t = power_map(A, R);
  ld lhs = std::abs(s - t), k = singular_constant(q);
  ld bb = abs_pow(B, R - 1);
  Sample out{static_cast<double>(k * bb - lhs), static_cast<double>(std::abs(s) + std::abs(t) + k * bb), -1.0,
             {a, b, r, q}};
  if (bb > 0) out.ratio = static_cast<double>(lhs / bb / k);
  return out;
}

double sin_minus_id(double u) {
  if (std::abs(u) < 1e-2) {
    double u2 = u * u;
    return -u * u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0));
  }
  return std::sin(u) - u;
}

}  // namespace

double check_revL1(double a, double b, double r) { return revL1(a, b, r).slack; }
double check_superlinear(double a, double b, double r, double q) { return superlinear(a, b, r, q).slack; }
double check_singular(double a, double b, double r, double q) { return singular(a, b, r, q).slack; }

double C2Function::symmetrized(const Point& x, const Point& y, double r, const CoefficientField* a) const {
  double lin, ep, lm, em;
  double sym, dp;
  if (split && split(x, y, lin, ep) && split(x, Point(-y), lm, em)) {
    sym = pair_phi(lin, ep, em, r);
    dp = power_map(-(lin + ep), r);
  } else {
    double v0 = f(x);
    dp = power_map(v0 - f(x + y), r);
    sym = dp + power_map(v0 - f(x - y), r);
  }
  if (!a || a->is_zero()) return a ? 0.0 : sym;
  double ap = (*a)(x, y), am = (*a)(x, Point(-y));
  return am * sym + (ap - am) * dp;
}

C2Function C2Function::barrier() {
  C2Function c;
  c.f = [](const Point& x) { return barrier_eval(x); };
  c.split = [](const Point& x, const Point& y, double& lin, double& rest) {
    double w = 1.0 - x.squaredNorm();
    if (w <= 0.0) return false;
    double xy = x.dot(y), yy = y.squaredNorm();
    lin = -4.0 * w * xy;
    if ((x + y).squaredNorm() < 1.0) {
      double d = 2.0 * xy + yy;
      rest = -2.0 * w * yy + d * d;
    } else {
      rest = -w * w - lin;
    }
    return true;
  };
  c.c0 = 1.0;
  c.c1 = 8.0 / (3.0 * std::sqrt(3.0));
  c.c2 = 8.0;
  c.name = "barrier";
  return c;
}

C2Function C2Function::affine(Point g, double c0) {
  C2Function c;
  c.f = [g, c0](const Point& x) { return g.dot(x) + c0; };
  c.split = [g](const Point&, const Point& y, double& lin, double& rest) {
    lin = g.dot(y);
    rest = 0.0;
    return true;
  };
  c.c0 = g.isZero() ? std::abs(c0) : std::numeric_limits<double>::infinity();
  c.c1 = g.norm();
  c.c2 = 0.0;
  c.name = "affine";
  return c;
}

C2Function C2Function::constant(double v) {
  C2Function c = affine(Point::Zero(2), v);
  c.f = [v](const Point&) { return v; };
  c.split = [](const Point&, const Point&, double& lin, double& rest) {
    lin = rest = 0.0;
    return true;
  };
  c.name = "constant";
  return c;
}

C2Function C2Function::cosine(double k) {
  C2Function c;
  c.f = [k](const Point& x) { return std::cos(k * x(0)); };
  c.split = [k](const Point& x, const Point& y, double& lin, double& rest) {
    double u = k * y(0), s = std::sin(k * x(0)), co = std::cos(k * x(0)), h = std::sin(0.5 * u);
    lin = -s * u;
    rest = -s * sin_minus_id(u) - 2.0 * co * h * h;
    return true;
  };
  c.c0 = 1.0;
  c.c1 = std::abs(k);
  c.c2 = k * k;
  c.name = "cosine";
  return c;
}

const char* c2_mode_name(C2Mode m) {
  switch (m) {
    case C2Mode::Rev3: return "rev3";
    case C2Mode::Rev10: return "rev10";
    case C2Mode::Rev11: return "rev11";
    case C2Mode::Rev30: return "rev30";
  }
  return "?";
}

C2Mode c2_mode_from(const std::string& s) {
  for (auto m : {C2Mode::Rev3, C2Mode::Rev10, C2Mode::Rev11, C2Mode::Rev30})
    if (s == c2_mode_name(m)) return m;
  throw InvalidArgument("unknown C2 mode '" + s + "'");
}

namespace {

// c with |phi_r(D+) + phi_r(D-)| <= c |y|^r, r >= 2.
double second_order_constant(const C2Function& phi, double r) {
  if (phi.c2 == 0.0) return 0.0;
  double near = (r - 1.0) * phi.c2 * std::pow(phi.c1 + phi.c2, r - 2.0);
  double far = 2.0 * std::pow(2.0 * phi.c0, r - 1.0);
  return std::max(near, far);
}

}  // namespace

C2Bound check_C2_bounds(const C2Function& phi, const Point& x, const Point& y, C2Mode mode, double r,
                        const CoefficientField& a) {
  C2Bound b;
  switch (mode) {
    case C2Mode::Rev3:
      if (!(r >= 2.0)) throw InvalidArgument("rev3 needs p >= 2");
      b.lhs = phi.symmetrized(x, y, r);
      b.constant = second_order_constant(phi, r);
      b.power = r;
      break;
    case C2Mode::Rev10:
      if (!(r > 1.0 && r < 2.0)) throw InvalidArgument("rev10 needs 1 < p < 2");
      b.lhs = phi.symmetrized(x, y, r);
      b.constant = 2.0 * std::pow(phi.c1, r - 1.0);
      b.power = r - 1.0;
      break;
    case C2Mode::Rev11:
      if (!(r > 1.0)) throw InvalidArgument("rev11 needs q > 1");
      b.lhs = phi.symmetrized(x, y, r, &a);
      b.constant = 2.0 * a.M() * std::pow(phi.c1, r - 1.0);
      b.power = r - 1.0;
      break;
    case C2Mode::Rev30:
      if (!(r >= 2.0)) throw InvalidArgument("rev30 needs q >= 2");
      if (!a.symmetric()) throw InvalidArgument("rev30 needs a(x, y) = a(x, -y)");
      b.lhs = phi.symmetrized(x, y, r, &a);
      b.constant = a.M() * second_order_constant(phi, r);
      b.power = r;
      break;
  }
  double ny = y.norm();
  b.rhs = b.constant == 0.0 ? 0.0 : b.constant * std::pow(ny, b.power);
  return b;
}

const char* local_mode_name(LocalMode m) {
  switch (m) {
    case LocalMode::Rev5: return "rev5";
    case LocalMode::Rev9: return "rev9";
    case LocalMode::Rev6: return "rev6";
    case LocalMode::Rev8: return "rev8";
    case LocalMode::Rev31: return "rev31";
  }
  return "?";
}

LocalMode local_mode_from(const std::string& s) {
  for (auto m : {LocalMode::Rev5, LocalMode::Rev9, LocalMode::Rev6, LocalMode::Rev8, LocalMode::Rev31})
    if (s == local_mode_name(m)) return m;
  throw InvalidArgument("unknown integrability mode '" + s + "'");
}

std::string local_hypothesis_failure(const ProblemParams& P, LocalMode mode, double alpha) {
  const auto& e = P.exponents;
  std::ostringstream os;
  switch (mode) {
    case LocalMode::Rev5:
      if (!(e.p >= 2.0)) os << "rev5 needs p >= 2";
      break;
    case LocalMode::Rev9:
      if (!(e.p < 2.0 && e.p * (1.0 - e.s) > 1.0)) os << "rev9 needs 1/(1-s) < p < 2";
      break;
    case LocalMode::Rev6:
      if (!(e.q * (1.0 - e.t) > 1.0)) os << "rev6 needs q > 1/(1-t)";
      break;
    case LocalMode::Rev8:
      if (!(alpha > 0.0 && alpha <= 1.0))
        os << "rev8 needs the Holder exponent alpha in (0, 1]";
      else if (!(e.q >= 2.0 && e.q * (1.0 - e.t) > 1.0 - alpha))
        os << "rev8 needs q >= 2 and q > (1-alpha)/(1-t)";
      break;
    case LocalMode::Rev31:
      if (!(e.q >= 2.0)) os << "rev31 needs q >= 2";
      else if (!P.a.symmetric()) os << "rev31 needs a(x, y) = a(x, -y)";
      break;
  }
  return os.str();
}

IntegrabilityResult check_local_integrability(const C2Function& phi, const ProblemParams& P, LocalMode mode,
                                              const IntegrabilityOptions& opt) {
  const auto& e = P.exponents;
  const int n = e.n;
  if (!(opt.rho > 0.0 && opt.rho <= 1.0)) throw InvalidArgument("integrability: rho must lie in (0, 1]");
  if (opt.enforce_hypotheses) {
    auto why = local_hypothesis_failure(P, mode, opt.alpha);
    if (!why.empty()) throw InvalidArgument(why);
  }
  const Point x = opt.x.size() == n ? opt.x : Point(Point::Zero(n));
  const bool qmode = mode != LocalMode::Rev5 && mode != LocalMode::Rev9;
  const double r = qmode ? e.q : e.p;
  const KernelField& K = qmode ? P.Ktq : P.Ksp;
  const CoefficientField* a = qmode ? &P.a : nullptr;

  auto integrand = [&](const Point& y) { return std::abs(phi.symmetrized(x, y, r, a)) * K(x, y); };

  // Dyadic shells rho 2^{-k-1} < |y| < rho 2^{-k}, each integrated adaptively in the radius; the
  // part below the deepest shell is the geometric tail of the last two shells, infinite when
  // they do not decay.
  auto mesh = [&](int level, int& shells, double& tail) {
    shells = 16 << level;
    const int na = n == 1 ? 2 : 32 << level;
    std::vector<Point> dirs;
    for (int k = 0; k < na; ++k) {
      if (n == 1) {
        dirs.push_back(point(k == 0 ? 1.0 : -1.0));
      } else {
        double th = 2.0 * std::numbers::pi * (k + 0.5) / na;
        dirs.push_back(point(std::cos(th), std::sin(th)));
      }
    }
    const double dw = n == 1 ? 1.0 : 2.0 * std::numbers::pi / na;
    auto radial = [&](double rr) {
      double ring = 0.0;
      for (const auto& om : dirs) ring += integrand(Point(rr * om));
      return dw * ring * (n == 1 ? 1.0 : rr);
    };
    double sum = 0.0, last = 0.0, before = 0.0;
    for (int s = 0; s < shells; ++s) {
      double hi = opt.rho * std::exp2(-s), lo = 0.5 * hi;
      auto first = quad::gk15<double>(radial, lo, hi);
      double tol = 1e-9 * std::abs(first.value) + 1e-300;
      double v = quad::adaptive<double>(radial, {lo, hi}, tol, 64 << level).value;
      sum += v;
      before = last;
      last = v;
    }
    tail = 0.0;
    if (last != 0.0) {
      double ratio = last / before;
      tail = ratio > 0.0 && ratio < 1.0 ? last * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
    }
    return sum + tail;
  };

  IntegrabilityResult out;
  out.history.push_back(mesh(0, out.shells, out.tail));
  for (int level = 1; level <= opt.refinements; ++level) {
    double v = mesh(level, out.shells, out.tail);
    double prev = out.history.back();
    out.history.push_back(v);
    if (!std::isfinite(v) || !std::isfinite(prev)) continue;
    double den = std::max(std::abs(v), 1e-300);
    out.rel_change = v == prev ? 0.0 : std::abs(v - prev) / den;
    if (out.rel_change <= opt.rel_tol) {
      out.value = v;
      return out;
    }
  }
  std::ostringstream os;
  os.precision(8);
  os << local_mode_name(mode) << ": integral did not settle across " << opt.refinements << " refinements (";
  for (std::size_t k = 0; k < out.history.size(); ++k) os << (k ? ", " : "") << out.history[k];
  os << ")";
  throw DivergenceDetected(os.str());
}

namespace {

struct Acc {
  std::uint64_t samples = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> witness;
  double max_ratio = 0.0;

  void add(const Sample& s, double tol) {
    ++samples;
    if (s.slack < -tol * s.scale) ++violations;
    if (s.slack < worst || witness.empty()) {
      worst = s.slack;
      witness = s.in;
    }
    max_ratio = std::max(max_ratio, s.ratio);
  }
  void merge(const Acc& o) {
    samples += o.samples;
    violations += o.violations;
    if (o.samples && (o.worst < worst || witness.empty())) {
      worst = o.worst;
      witness = o.witness;
    }
    max_ratio = std::max(max_ratio, o.max_ratio);
  }
};

template <class Draw>
IneqReport campaign(const std::string& name, const FuzzOptions& opt, double tol, Draw draw) {
  const int chunks = std::max(1, opt.chunks);
  std::vector<Acc> acc(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < chunks; ++c) {
    auto rng = rng_stream(opt.seed, static_cast<std::uint64_t>(c));
    std::uint64_t lo = opt.draws * c / chunks, hi = opt.draws * (c + 1) / chunks;
    for (std::uint64_t k = lo; k < hi; ++k) acc[c].add(draw(rng), tol);
  }
  Acc all;
  for (const auto& a : acc) all.merge(a);
  IneqReport r;
  r.name = name;
  r.samples = all.samples;
  r.violations = all.violations;
  r.worst_slack = all.worst;
  r.witness = all.witness;
  r.max_ratio = all.max_ratio;
  return r;
}

// Mixture of uniform, log-uniform and near-degenerate magnitudes.
struct Mix {
  std::uniform_real_distribution<double> U{0.0, 1.0};

  double sign(std::mt19937_64& g) { return U(g) < 0.5 ? -1.0 : 1.0; }
  double uniform(std::mt19937_64& g, double R) { return R * (2.0 * U(g) - 1.0); }
  double loguni(std::mt19937_64& g, double lo, double hi) { return sign(g) * std::pow(10.0, lo + (hi - lo) * U(g)); }
  double tiny(std::mt19937_64& g) { return U(g) < 0.05 ? 0.0 : loguni(g, -16.0, -8.0); }

  // (a, b) with the degenerate component putting either entry (or both) near zero
  std::pair<double, double> pair(std::mt19937_64& g) {
    double k = U(g);
    if (k < 0.4) return {uniform(g, 10.0), uniform(g, 10.0)};
    if (k < 0.7) return {loguni(g, -8.0, 1.0), loguni(g, -8.0, 1.0)};
    double m = U(g);
    if (m < 0.6) return {uniform(g, 10.0), tiny(g)};
    if (m < 0.9) return {tiny(g), uniform(g, 10.0)};
    return {tiny(g), tiny(g)};
  }
  double in(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * U(g); }
};

}  // namespace

IneqReport fuzz_revL1(const FuzzOptions& opt) {
  return campaign("revL1", opt, kScalarTol, [](std::mt19937_64& g) {
    Mix m;
    auto [a, b] = m.pair(g);
    double r = m.U(g) < 0.05 ? 2.0 : m.in(g, 2.0, 4.0);
    return revL1(a, b, r);
  });
}

IneqReport fuzz_superlinear(const FuzzOptions& opt) {
  return campaign("superlinear", opt, kScalarTol, [](std::mt19937_64& g) {
    Mix m;
    double q = m.in(g, 2.0, 5.0), p = m.in(g, 2.0, q);
    double r = m.U(g) < 0.5 ? p : q;
    auto [a, d] = m.pair(g);
    double b = -a + std::abs(d);
    return superlinear(a, b, r, q);
  });
}

IneqReport fuzz_singular(const FuzzOptions& opt) {
  auto rep = campaign("singular", opt, kScalarTol, [](std::mt19937_64& g) {
    Mix m;
    double p, q, r;
    if (m.U(g) < 0.6) {
      q = m.in(g, 1.0, 2.0);
      p = m.in(g, 1.0, q);
      if (!(p > 1.0)) p = q;
      r = m.U(g) < 0.5 ? p : q;
    } else {
      q = m.in(g, 2.0, 4.0);
      r = p = m.in(g, 1.0, 2.0);
    }
    if (!(r > 1.0)) r = 1.5;
    auto [a, b] = m.pair(g);
    return singular(a, b, r, q);
  });
  rep.ratio_bound = 1.0;
  return rep;
}

IneqReport fuzz_C2(const FuzzOptions& opt) {
  struct Bank {
    std::vector<C2Function> phis;
    std::vector<CoefficientField> any, sym;
  };
  std::vector<Bank> banks(2);
  for (int n = 1; n <= 2; ++n) {
    auto& b = banks[n - 1];
    Point g = Point::Zero(n);
    g(0) = 1.3;
    if (n == 2) g(1) = -0.4;
    b.phis = {C2Function::barrier(), C2Function::cosine(1.0), C2Function::cosine(3.7), C2Function::affine(g, 0.2)};
    b.any = {CoefficientField::holder(0.5, 1.0), CoefficientField::checkerboard(n, 0.3, 0.2, 1.1),
             CoefficientField::halfspace(point(1.0), 0.1, 0.9), CoefficientField::constant(0.7)};
    b.sym = {CoefficientField::constant(0.7), CoefficientField::halfspace(point(1.0), -0.2, 1.4),
             CoefficientField::table({-1.0, 0.0, 1.0}, {0.1, 0.9, 0.3})};
  }
  return campaign("revL", opt, kC2Tol, [&banks](std::mt19937_64& g) {
    Mix m;
    int n = m.U(g) < 0.5 ? 1 : 2;
    const auto& b = banks[n - 1];
    auto mode = static_cast<C2Mode>(std::min(3, static_cast<int>(4 * m.U(g))));
    const auto& phi = b.phis[std::min<std::size_t>(b.phis.size() - 1, static_cast<std::size_t>(b.phis.size() * m.U(g)))];
    Point x(n), y(n);
    for (int d = 0; d < n; ++d) x(d) = m.uniform(g, 1.5);
    double ny = m.U(g) < 0.7 ? std::pow(10.0, m.in(g, -8.0, 0.0)) : m.in(g, 0.0, 3.0);
    for (int d = 0; d < n; ++d) y(d) = m.uniform(g, 1.0);
    if (y.norm() == 0.0) y(0) = 1.0;
    y *= ny / y.norm();
    double r = 2.0;
    const CoefficientField* a = nullptr;
    auto pick = [&](const std::vector<CoefficientField>& v) {
      return &v[std::min<std::size_t>(v.size() - 1, static_cast<std::size_t>(v.size() * m.U(g)))];
    };
    switch (mode) {
      case C2Mode::Rev3: r = m.in(g, 2.0, 4.0); break;
      case C2Mode::Rev10: r = m.in(g, 1.05, 1.95); break;
      case C2Mode::Rev11: r = m.in(g, 1.05, 4.0); a = pick(b.any); break;
      case C2Mode::Rev30: r = m.in(g, 2.0, 4.0); a = pick(b.sym); break;
    }
    auto res = a ? check_C2_bounds(phi, x, y, mode, r, *a) : check_C2_bounds(phi, x, y, mode, r);
    Sample s;
    s.slack = res.slack();
    double M = a ? a->M() : 1.0;
    double dp = std::abs(phi(x) - phi(Point(x + y))), dm = std::abs(phi(x) - phi(Point(x - y)));
    s.scale = res.rhs + M * (std::pow(dp, r - 1.0) + std::pow(dm, r - 1.0)) + 1e-300;
    s.in = {static_cast<double>(mode), static_cast<double>(n), r};
    for (int d = 0; d < n; ++d) s.in.push_back(x(d));
    for (int d = 0; d < n; ++d) s.in.push_back(y(d));
    return s;
  });
}

std::vector<IneqReport> fuzz_all(const FuzzOptions& opt) {
  return {fuzz_revL1(opt), fuzz_superlinear(opt), fuzz_singular(opt), fuzz_C2(opt)};
}

}  // namespace nldp
