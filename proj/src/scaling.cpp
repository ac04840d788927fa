#include "nldp/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nldp/probes.hpp"

namespace nldp {

ScalingContext ScalingContext::identity(int n) { return rescale(1.0, 1.0, Point::Zero(n)); }

ScalingContext ScalingContext::rescale(double lambda, double mu, Point x0) {
  ScalingContext c;
  c.lambda = lambda;
  c.mu = mu;
  c.x0 = std::move(x0);
  return c;
}

ScalingContext ScalingContext::blowup(int j, double gamma, double m, Point x0) {
  ScalingContext c;
  c.j = j;
  c.gamma = gamma;
  c.m = m;
  c.lambda = std::exp2(gamma * j + 1.0);
  c.mu = std::exp2(-j);
  c.x0 = std::move(x0);
  return c;
}

void ScalingContext::validate(int n) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("scaling: lambda must be positive");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("scaling: mu must be positive");
  if (x0.size() != n) throw InvalidArgument("scaling: x0 dimension does not match n");
}

bool ScalingContext::is_identity() const { return lambda == 1.0 && mu == 1.0 && m == 0.0 && x0.isZero(); }

ScalingContext ScalingContext::then(const ScalingContext& after) const {
  // after(this(u))(x) = after.lambda (lambda (u(mu (after.mu x + after.x0) + x0) - m) - after.m)
  ScalingContext c;
  c.lambda = lambda * after.lambda;
  c.mu = mu * after.mu;
  c.x0 = mu * after.x0 + x0;
  c.m = m + after.m / lambda;
  c.j = j + after.j;
  c.gamma = after.gamma;
  return c;
}

double coefficient_factor(const Exponents& e, const ScalingContext& ctx) {
  return std::pow(ctx.lambda, e.p - e.q) * std::pow(ctx.mu, e.s * e.p - e.t * e.q);
}

double source_factor(const Exponents& e, const ScalingContext& ctx) {
  return std::pow(ctx.lambda, e.p - 1.0) * std::pow(ctx.mu, e.s * e.p);
}

ProblemParams rescale_problem(const ProblemParams& P, const ScalingContext& ctx) {
  const auto& e = P.exponents;
  ctx.validate(e.n);
  if (ctx.is_identity()) return P;
  ProblemParams out = P;
  out.Ksp = P.Ksp.transformed(ctx.mu, ctx.x0);
  out.Ktq = P.Ktq.transformed(ctx.mu, ctx.x0);
  out.a = P.a.transformed(coefficient_factor(e, ctx), ctx.mu, ctx.x0);
  const double fs = source_factor(e, ctx), mu = ctx.mu;
  const Point x0 = ctx.x0;
  auto g = P.f.f;
  out.f = SourceTerm{[g, fs, mu, x0](const Point& x) { return fs * g(mu * x + x0); }, fs * P.f.sup, P.f.tag + "|scaled"};
  return out;
}

ScalingCheck scaling_identity_check(const GridFunction& u, const ProblemParams& P, const ScalingContext& ctx,
                                    const QuadratureSpec& Q, int probes) {
  const auto& e = P.exponents;
  ctx.validate(e.n);
  auto q = Q.resolved(u);
  const double radius = 0.5 * u.half_width();
  if (radius + q.rho_near > u.half_width()) throw InvalidArgument("scaling check: box too small for the probe ball");
  ScalingCheck out;
  out.probes = halton_ball(e.n, probes, radius, u.center());
  if (ctx.is_identity()) {
    for (const auto& y : out.probes) {
      double v = evaluate(u, y, P, Q).value;
      out.lhs.push_back(v);
      out.rhs.push_back(v);
    }
    return out;
  }
  const double fs = source_factor(e, ctx);
  GridFunction v = u.transformed(ctx.lambda, ctx.mu, ctx.x0, ctx.m);
  ProblemParams Pt = rescale_problem(P, ctx);
  QuadratureSpec Qt = Q;
  Qt.rho_near = q.rho_near / ctx.mu;
  Qt.R_far = 0.0;
  Qt.tol = q.tol * fs;
  double scale = 0.0;
  for (const auto& y : out.probes) {
    Point x = (y - ctx.x0) / ctx.mu;
    out.lhs.push_back(evaluate(v, x, Pt, Qt).value);
    out.rhs.push_back(fs * evaluate(u, y, P, q).value);
    scale = std::max(scale, std::abs(out.rhs.back()));
  }
  for (std::size_t k = 0; k < out.lhs.size(); ++k) {
    double den = std::max({std::abs(out.rhs[k]), 1e-3 * scale, 1e-300});
    out.max_rel = std::max(out.max_rel, std::abs(out.lhs[k] - out.rhs[k]) / den);
  }
  return out;
}

namespace {

std::string describe(const BoundCheck& c) {
  std::ostringstream os;
  os.precision(10);
  os << c.name << " violated: " << c.value << " > " << c.bound << " at (";
  for (Eigen::Index i = 0; i < c.witness.size(); ++i) os << (i ? ", " : "") << c.witness(i);
  os << ")";
  return os.str();
}

void worst(BoundCheck& c, double v, const Point& z) {
  if (c.witness.size() == 0 || v > c.value) {
    c.value = v;
    c.witness = z;
  }
}

}  // namespace

BoundCheck exterior_envelope_check(const GridFunction& u, double eta, int shells) {
  const int n = u.dim();
  BoundCheck c{"exterior envelope u(y) <= 2|2y|^eta - 1", -std::numeric_limits<double>::infinity(), 0.0, true, {}};
  const int per = n == 1 ? 32 : 96;
  // Dyadic shells 2^l <= |y| <= 2^{l+1}; at a blow-up level the outer ones reach coarser scales.
  for (int l = 0; l < shells; ++l)
    for (int k = 0; k < per; ++k) {
      Point z(n);
      if (n == 1) {
        z(0) = (k % 2 ? -1.0 : 1.0) * std::exp2(l + (k / 2 + 0.5) / (per / 2));
      } else {
        double th = 2.0 * M_PI * radical_inverse(k + 1, 3) + 0.1 * l;
        double rr = std::exp2(l + radical_inverse(k + 1, 2));
        z << rr * std::cos(th), rr * std::sin(th);
      }
      double env = 2.0 * std::pow(2.0 * z.norm(), eta) - 1.0;
      worst(c, u(z) - env, z);
    }
  c.ok = c.value <= 1e-12;
  return c;
}

BlowupReport blowup_step(const GridFunction& u_tilde, int j, double gamma, double m, const Point& x0,
                         const ProblemParams& P_tilde, const BlowupBounds& bounds, bool strict) {
  const auto& e = P_tilde.exponents;
  const int n = e.n;
  if (j < 0) throw InvalidArgument("blowup: level must be non-negative");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("blowup: gamma must lie in (0, 1)");
  if (!(bounds.eta > 0.0)) throw InvalidArgument("blowup: eta must be positive");
  BlowupReport r;
  r.ctx = ScalingContext::blowup(j, gamma, m, x0);
  r.u_bar = u_tilde.transformed(r.ctx.lambda, r.ctx.mu, x0, m);
  r.P_bar = rescale_problem(P_tilde, r.ctx);

  std::vector<Point> inner = halton_ball(n, 1000, 1.0, Point::Zero(n));
  inner.push_back(Point::Zero(n));
  for (Eigen::Index k = 0; k < r.u_bar.size(); ++k)
    if (r.u_bar.node(k).norm() < 1.0) inner.push_back(r.u_bar.node(k));

  r.sup_u = {"sup |u_bar| on B_1", 0.0, 1.0, true, {}};
  r.sup_f = {"sup |f_bar| on B_1", 0.0, bounds.sigma, true, {}};
  for (const auto& z : inner) {
    worst(r.sup_u, std::abs(r.u_bar(z)), z);
    worst(r.sup_f, std::abs(r.P_bar.f(z)), z);
  }
  r.sup_u.ok = r.sup_u.value <= 1.0 + 1e-12;
  r.sup_f.ok = r.sup_f.value <= bounds.sigma * (1 + 1e-12);

  r.sup_a = {"sup a_bar", 0.0, bounds.M_bar, true, {}};
  if (!r.P_bar.a.is_zero()) {
    auto rng = rng_stream(31, static_cast<std::uint64_t>(j));
    auto xs = random_ball(n, 1000, 1.0, rng);
    auto ys = random_ball(n, 1000, 4.0, rng);
    for (std::size_t k = 0; k < xs.size(); ++k) worst(r.sup_a, r.P_bar.a(xs[k], ys[k]), xs[k]);
    r.sup_a.value = std::max(r.sup_a.value, r.P_bar.a.M());
  }
  r.sup_a.ok = r.sup_a.value <= bounds.M_bar * (1 + 1e-12) + 1e-15;

  r.envelope = exterior_envelope_check(r.u_bar, bounds.eta, j + 6);

  if (strict)
    for (const BoundCheck* c : {&r.sup_u, &r.sup_f, &r.sup_a, &r.envelope})
      if (!c->ok) throw InductionViolation(describe(*c));
  return r;
}

}  // namespace nldp
