#include "nldp/reglab.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "nldp/probes.hpp"

namespace nldp {

double sup_norm(const GridFunction& u) {
  double s = u.max_abs();
  const auto& e = u.exterior();
  return std::max({s, std::abs(e.sup), std::abs(e.inf)});
}

GridFunction negated(const GridFunction& u) {
  return GridFunction(u.dim(), u.lo(), u.h(), u.nodes_per_axis(), -u.values(),
                      u.exterior().transformed(-1.0, 1.0, Point::Zero(u.dim()), 0.0), u.interp());
}

Oscillation oscillation(const GridFunction& u, const Point& center, double radius, int probes) {
  if (!(radius > 0.0)) throw InvalidArgument("oscillation: radius must be positive");
  Oscillation o;
  o.sup = -std::numeric_limits<double>::infinity();
  o.inf = std::numeric_limits<double>::infinity();
  auto take = [&](double v) {
    o.sup = std::max(o.sup, v);
    o.inf = std::min(o.inf, v);
  };
  take(u(center));
  const auto& vals = u.values();
  for (Eigen::Index k = 0; k < u.size(); ++k)
    if ((u.node(k) - center).norm() <= radius) take(vals(k));
  for (const auto& z : halton_ball(u.dim(), static_cast<std::size_t>(probes), radius, center)) take(u(z));
  o.osc = o.sup - o.inf;
  return o;
}

HolderFit holder_fit(const std::vector<double>& radii, const std::vector<double>& osc, double floor) {
  if (radii.size() != osc.size() || radii.size() < 2) throw InvalidArgument("holder_fit: need >= 2 radii");
  const std::size_t m = radii.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(osc[k] > 10.0 * floor) || !(osc[k] > 0.0)) {
      std::ostringstream os;
      os << "holder_fit: oscillation " << osc[k] << " at radius " << radii[k] << " is at the interpolation floor";
      throw DegenerateFit(os.str());
    }
    double x = std::log(radii[k]), y = std::log(osc[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double den = m * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw DegenerateFit("holder_fit: radii do not vary");
  HolderFit f;
  f.gamma = (m * sxy - sx * sy) / den;
  double icpt = (sy - f.gamma * sx) / m;
  f.prefactor = std::exp(icpt);
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double d = std::log(osc[k]) - (icpt + f.gamma * std::log(radii[k]));
    ss += d * d;
  }
  f.residual = std::sqrt(ss / m);
  f.radii = radii;
  f.osc = osc;
  return f;
}

HolderFit holder_fit(const GridFunction& u, const Point& center, int i_min, int i_max) {
  if (i_max - i_min < 3) throw InvalidArgument("holder_fit: need at least 3 dyadic levels");
  if (std::exp2(-i_max) < 4.0 * u.h()) throw InvalidArgument("holder_fit: finest radius is below 4h");
  std::vector<double> radii, osc;
  for (int i = i_min; i <= i_max; ++i) {
    radii.push_back(std::exp2(-i));
    osc.push_back(oscillation(u, center, radii.back()).osc);
  }
  double floor = 64.0 * DBL_EPSILON * std::max(1.0, u.max_abs());
  return holder_fit(radii, osc, floor);
}

double sublevel_measure(const GridFunction& u) {
  const int n = u.dim();
  const double h = u.h(), half = 0.5 * std::sqrt(static_cast<double>(n)) * h;
  int kmin[2] = {0, 0}, kmax[2] = {0, 0};
  for (int d = 0; d < n; ++d) {
    kmin[d] = static_cast<int>(std::ceil((-1.0 - h - u.lo()(d)) / h));
    kmax[d] = static_cast<int>(std::floor((1.0 + h - u.lo()(d)) / h));
  }
  double count = 0.0;
  Point z(n);
  for (int j = kmin[1]; j <= kmax[1]; ++j)
    for (int i = kmin[0]; i <= kmax[0]; ++i) {
      z(0) = u.lo()(0) + i * h;
      if (n == 2) z(1) = u.lo()(1) + j * h;
      double r = z.norm();
      double w = r + half <= 1.0 ? 1.0 : (r - half < 1.0 ? 0.5 : 0.0);
      if (w > 0.0 && u(z) <= 0.0) count += w;
    }
  return count * std::pow(h, n);
}

bool GrowthLemmaInstance::hypotheses_ok() const {
  if (hypotheses.size() != 4) return false;
  return std::all_of(hypotheses.begin(), hypotheses.end(), [](const HypothesisCheck& h) { return h.ok; });
}

GrowthLemmaInstance growth_lemma_check(const GridFunction& u, const ConstantsBundle& bundle, const ProblemParams& P,
                                       const QuadratureSpec& Q, const GrowthCheckOptions& opt) {
  const int n = u.dim();
  if (n != P.exponents.n) throw InvalidArgument("growth lemma: dimension mismatch");
  GrowthLemmaInstance g;
  g.u = u;
  g.sigma = bundle.sigma;
  g.eta = bundle.eta;
  g.epsilon = bundle.epsilon;
  g.theta = bundle.theta;
  const Point origin = Point::Zero(n);

  HypothesisCheck op{"L u <= sigma in B_1", true, -std::numeric_limits<double>::infinity(), g.sigma, 0.0, {}};
  auto q = Q.resolved(u);
  std::vector<Point> probes{origin};
  for (const auto& z : halton_ball(n, static_cast<std::size_t>(opt.probes), 1.0, origin)) probes.push_back(z);
  if (opt.snap_to_nodes) {
    std::vector<Eigen::Index> seen;
    std::vector<Point> snapped;
    for (const auto& x : probes) {
      if (!u.inside(x)) continue;
      int idx[2] = {0, 0};
      for (int d = 0; d < n; ++d) {
        long k = std::lround((x(d) - u.lo()(d)) / u.h());
        idx[d] = static_cast<int>(std::clamp(k, 0L, static_cast<long>(u.nodes_per_axis() - 1)));
      }
      Eigen::Index k = u.index(idx[0], idx[1]);
      Point z = u.node(k);
      if (z.norm() > 1.0 || std::find(seen.begin(), seen.end(), k) != seen.end()) continue;
      seen.push_back(k);
      snapped.push_back(z);
    }
    probes = std::move(snapped);
  }
  g.probe_radius = 0.0;
  for (const auto& x : probes) {
    if (q.enforce_margin && u.boundary_distance(x) < q.rho_near) continue;
    auto e = evaluate(u, x, P, q);
    ++g.operator_probes;
    g.probe_radius = std::max(g.probe_radius, x.norm());
    double gap = std::abs(g.sigma - e.value);
    if (e.value + e.error > op.value + op.error || op.witness.size() == 0) {
      op.value = e.value;
      op.error = e.error;
      op.witness = x;
    }
    if (e.value + e.error <= g.sigma) continue;
    if (e.value - e.error > g.sigma) {
      op.ok = false;
      continue;
    }
    std::ostringstream os;
    os.precision(10);
    os << "operator at x = " << x.transpose() << " is " << e.value << " +- " << e.error << ", margin to sigma "
       << gap;
    throw HypothesisUnverifiable(os.str());
  }
  if (g.operator_probes == 0) throw HypothesisUnverifiable("no operator probe in B_1 clears the box margin");
  g.hypotheses.push_back(op);

  auto in_ball = oscillation(u, origin, 1.0);
  g.hypotheses.push_back({"u <= 1 in B_1", in_ball.sup <= 1.0 + opt.conclusion_tol, in_ball.sup, 1.0, 0.0, {}});

  double extent = u.center().norm() + u.half_width() * std::sqrt(static_cast<double>(n));
  int shells = std::max(opt.shells, static_cast<int>(std::ceil(std::log2(std::max(extent, 1.0)))) + 3);
  auto env = exterior_envelope_check(u, g.eta, shells);
  g.hypotheses.push_back({"u <= 2|2x|^eta - 1 off B_1", env.ok, env.value, 0.0, 0.0, env.witness});

  double meas = sublevel_measure(u);
  g.hypotheses.push_back({"|{u <= 0} in B_1| > epsilon", meas > g.epsilon, meas, g.epsilon, 0.0, {}});

  if (g.hypotheses_ok()) {
    g.conclusion_checked = true;
    g.sup_half = oscillation(u, origin, 0.5).sup;
    g.margin = 1.0 - g.theta - g.sup_half;
    g.conclusion_ok = g.margin >= -opt.conclusion_tol;
  }
  return g;
}

std::vector<double> OscillationTrace::radii() const {
  std::vector<double> r;
  for (const auto& l : levels) r.push_back(l.radius);
  return r;
}

std::vector<double> OscillationTrace::osc() const {
  std::vector<double> r;
  for (const auto& l : levels) r.push_back(l.measured.osc);
  return r;
}

bool OscillationTrace::all_bounds_ok() const {
  return std::all_of(levels.begin(), levels.end(), [](const LevelRecord& l) { return l.bound_ok; });
}

OscillationTrace dyadic_iteration(const GridFunction& u_tilde, const Point& x0, const ConstantsBundle& bundle,
                                  const ProblemParams& P_tilde, int levels, const DyadicOptions& opt) {
  const auto& e = P_tilde.exponents;
  const int n = e.n;
  if (x0.size() != n) throw InvalidArgument("dyadic iteration: x0 dimension mismatch");
  const auto& ext = u_tilde.exterior();
  if (!std::isfinite(ext.inf) || !std::isfinite(ext.sup))
    throw InvalidArgument("dyadic iteration: the exterior must declare finite bounds");
  OscillationTrace tr;
  tr.center = x0;
  tr.gamma = opt.gamma > 0.0 ? opt.gamma : bundle.gamma;
  const double gamma = tr.gamma, tol = 1e-10;
  tr.resolvable = std::max(0, static_cast<int>(std::floor(std::log2(1.0 / (4.0 * u_tilde.h())))));
  const int run = std::min(levels, tr.resolvable);

  double b = std::min(u_tilde.values().minCoeff(), ext.inf);
  double top = std::max(u_tilde.values().maxCoeff(), ext.sup);
  if (top - b > 1.0 + 1e-12)
    throw InvalidArgument("dyadic iteration: u_tilde must have oscillation <= 1 over R^n");
  double c = b + 1.0;

  LevelRecord base;
  base.radius = 1.0;
  base.b = b;
  base.c = c;
  base.measured = oscillation(u_tilde, x0, 1.0);
  base.bound = 1.0;
  base.bound_ok = base.measured.osc <= 1.0 + tol;
  base.envelope_consistent = b <= base.measured.inf + tol && c >= base.measured.sup - tol;
  tr.levels.push_back(base);

  double M_bar = opt.M_bar;
  if (!(M_bar > 0.0)) {
    double widen = std::max(1.0, std::exp2(run * (e.t * e.q - e.s * e.p)));
    M_bar = std::exp2(std::abs(e.q - e.p)) * P_tilde.a.M() * widen;
  }
  const BlowupBounds bounds{bundle.sigma, M_bar, bundle.eta};
  const double ball = unit_ball_volume(n);

  for (int j = 0; j < run; ++j) {
    LevelRecord rec;
    rec.level = j + 1;
    rec.radius = std::exp2(-(j + 1));
    rec.bound = std::exp2(-(j + 1) * gamma);
    const double m = 0.5 * (b + c);
    auto rep = blowup_step(u_tilde, j, gamma, m, x0, P_tilde, bounds, false);
    rec.blowup = {rep.sup_u, rep.sup_f, rep.sup_a, rep.envelope};

    double meas = sublevel_measure(rep.u_bar);
    GridFunction v = rep.u_bar;
    if (meas < 0.5 * ball) {
      v = negated(rep.u_bar);
      rec.negated = true;
      meas = sublevel_measure(v);
    }
    rec.sublevel = meas;

    std::string why;
    try {
      auto g = growth_lemma_check(v, bundle, rep.P_bar, opt.quad, opt.growth);
      rec.hypotheses = g.hypotheses;
      rec.conclusion_ok = g.conclusion_ok;
      rec.conclusion_margin = g.margin;
      if (!g.hypotheses_ok()) {
        for (const auto& h : g.hypotheses)
          if (!h.ok) why += (why.empty() ? "" : "; ") + h.name + " fails";
      } else if (!g.conclusion_ok) {
        why = "conclusion sup_{B_1/2} <= 1 - theta fails";
      }
    } catch (const HypothesisUnverifiable& ex) {
      why = std::string("hypothesis unverifiable: ") + ex.what();
    }

    if (why.empty()) {
      if (rec.negated)
        b = c - rec.bound;
      else
        c = b + rec.bound;
    }
    rec.b = b;
    rec.c = c;
    rec.measured = oscillation(u_tilde, x0, rec.radius);
    rec.bound_ok = rec.measured.osc <= rec.bound + tol;
    rec.envelope_consistent = b <= rec.measured.inf + tol && c >= rec.measured.sup - tol;
    tr.levels.push_back(rec);

    if (!why.empty()) {
      tr.breakdown = true;
      tr.breakdown_level = j + 1;
      tr.breakdown_reason = why;
      spdlog::warn("dyadic iteration stopped at level {}: {}", j + 1, why);
      if (opt.strict) throw IterationBreakdown("level " + std::to_string(j + 1) + ": " + why);
      break;
    }
  }

  tr.fitted_gamma = std::numeric_limits<double>::quiet_NaN();
  tr.fit_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> r, o;
  for (std::size_t k = 1; k < tr.levels.size(); ++k) {
    r.push_back(tr.levels[k].radius);
    o.push_back(tr.levels[k].measured.osc);
  }
  if (r.size() >= 2) {
    try {
      auto f = holder_fit(r, o, 64.0 * DBL_EPSILON * std::max(1.0, u_tilde.max_abs()));
      tr.fitted_gamma = f.gamma;
      tr.fit_residual = f.residual;
    } catch (const DegenerateFit&) {
    }
  }
  return tr;
}

PipelineResult run_pipeline(const ProblemParams& P, const SolveConfig& cfg, const PipelineOptions& opt) {
  const int n = P.exponents.n;
  PipelineResult out;
  auto [u, rep] = solve(P, cfg);
  out.u = std::move(u);
  out.solve = rep;
  out.u_sup = sup_norm(out.u);
  out.bundle = compute_constants(P, opt.epsilon, out.u_sup, opt.selection);
  const double lam = out.bundle.lambda;
  out.u_tilde = out.u.transformed(lam, 1.0, Point::Zero(n), 0.0);
  out.P_tilde = rescale_problem(P, ScalingContext::rescale(lam, 1.0, Point::Zero(n)));
  Point x0 = opt.x0.size() == n ? opt.x0 : Point(Point::Zero(n));
  out.trace = dyadic_iteration(out.u_tilde, x0, out.bundle, out.P_tilde, opt.levels, opt.dyadic);
  return out;
}

}  // namespace nldp
