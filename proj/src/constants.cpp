#include "nldp/constants.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nldp/operator.hpp"
#include "nldp/power.hpp"
#include "nldp/probes.hpp"
#include "nldp/rays.hpp"

namespace nldp {

double omega_n(int n) {
  if (n == 1) return 2.0;
  if (n == 2) return 2.0 * std::numbers::pi;
  throw InvalidArgument("omega_n: n must be 1 or 2");
}

double unit_ball_volume(int n) {
  if (n == 1) return 2.0;
  if (n == 2) return std::numbers::pi;
  throw InvalidArgument("unit_ball_volume: n must be 1 or 2");
}

namespace {

void check_eta(double eta, const Exponents& e) {
  double th = growth_threshold(e, true);
  if (!(eta > 0.0) || !(eta < th))
    throw DivergentSigma("eta must lie in (0, min{sp/(p-1), tq/(q-1)}) = (0, " + std::to_string(th) + ")");
}

// int_{1/4}^inf ((8r)^eta - 1)^{rho-1} r^{-1-alpha} dr. With r = w^{-1/e} / 4, e = alpha - eta (rho - 1), the
// integrand becomes (4^alpha / e) 2^{eta (rho - 1)} (1 - 2^{-eta} w^{eta/e})^{rho-1} on (0, 1].
double growth_integral(double eta, double rho, double alpha) {
  const double e = alpha - eta * (rho - 1.0);
  auto g = [&](double w) {
    double b = -std::expm1(eta * (std::log(w) / e - std::numbers::ln2));
    return rho == 2.0 ? b : std::pow(b, rho - 1.0);
  };
  auto I = quad::tanh_sinh<double>(g, 0.0, 1.0, 1e-15, 10, 1e-300);
  return std::pow(4.0, alpha) / e * std::exp2(eta * (rho - 1.0)) * I.value;
}

double growth_factor(double r, double eta, double rho) {
  double g = std::expm1(eta * std::log(8.0 * r));
  return g > 0 ? abs_pow(g, rho - 1.0) : 0.0;
}

// beta(x) - beta(x + y) = -(lin + rest) with lin = -4 w x.y.
void beta_split(const Point& x, double w, const Point& y, double& lin, double& rest) {
  double xy = x.dot(y), yy = y.squaredNorm();
  double d = 2.0 * xy + yy;
  lin = -4.0 * w * xy;
  rest = -2.0 * w * yy + d * d;
}

template <class RayFn>
quad::Integral<Pair> sphere(int n, RayFn&& ray, bool half, double tol) {
  return integrate_sphere(n, ray, half, {}, tol);
}

RaySpec base_spec(const Exponents& e, double tol) {
  RaySpec s;
  s.tol = tol;
  s.e_p = e.s * e.p;
  s.e_q = e.t * e.q;
  return s;
}

// (Ap_signed, Ap_abs) and (Aq, 0) over x + y in B_1.
void inner_terms(const Point& x, const ProblemParams& P, double tol, BarrierIntegrals& b) {
  const auto& e = P.exponents;
  const int n = e.n;
  const double w = 1.0 - x.squaredNorm();
  const double p = e.p, q = e.q;
  const bool qa = P.q_phase();
  // |beta(x) - beta(x + y)|^{p-1} K_sp is integrable at y = 0 only when p(1 - s) > 1.
  const bool abs_ok = p * (1.0 - e.s) > 1.0;
  auto ray = [&](const Point& om, bool qpart) {
    Point mom = -om;
    double ep = ball_exit(x, om), em = ball_exit(x, mom);
    RaySpec s = base_spec(e, tol);
    s.r_hi = std::max(ep, em);
    s.ts_level = 10;
    // |x + y| = |x| on one side, where beta(x) - beta(x + y) changes sign
    s.breaks = {std::min(ep, em), 2.0 * std::abs(x.dot(om))};
    auto F = [&](double r) -> Pair {
      Point y = r * om, my = -y;
      double jac = n == 2 ? r : 1.0;
      double lp, rp, lm, rm;
      beta_split(x, w, y, lp, rp);
      beta_split(x, w, my, lm, rm);
      double dp = -(lp + rp), dm = -(lm + rm);
      bool in_p = r < ep, in_m = r < em;
      if (qpart) {
        double v = 0.0;
        if (in_p) v += P.a(x, y) * abs_pow(dp, q - 1.0) * P.Ktq(x, y);
        if (in_m) v += P.a(x, my) * abs_pow(dm, q - 1.0) * P.Ktq(x, my);
        return Pair(P.c_hat * v * jac, 0.0);
      }
      double kp = P.Ksp(x, y), km = P.Ksp(x, my);
      double sgn = 0.0, ab = 0.0;
      if (abs_ok) {
        if (in_p) ab += abs_pow(dp, p - 1.0) * kp;
        if (in_m) ab += abs_pow(dm, p - 1.0) * km;
      }
      if (in_p && in_m && kp == km) {
        sgn = pair_phi(lp, rp, rm, p) * kp;
      } else {
        if (in_p) sgn += power_map(dp, p) * kp;
        if (in_m) sgn += power_map(dm, p) * km;
      }
      return Pair(sgn * jac, ab * jac);
    };
    return integrate_ray(F, s);
  };
  auto I = sphere(n, [&](const Point& om) { return ray(om, false); }, true, tol);
  b.Ap_signed = I.value(0);
  b.Ap_abs = abs_ok ? I.value(1) : std::numeric_limits<double>::infinity();
  b.error += I.error;
  if (qa) {
    auto J = sphere(n, [&](const Point& om) { return ray(om, true); }, true, tol);
    b.Aq = J.value(0);
    b.error += J.error;
  }
}

// Kernel masses over x + y outside B_1.
void outer_mass(const Point& x, const ProblemParams& P, double tol, BarrierIntegrals& b) {
  const auto& e = P.exponents;
  const int n = e.n;
  const bool qa = P.q_phase();
  auto ray = [&](const Point& om) {
    RaySpec s = base_spec(e, tol);
    s.r_lo = ball_exit(x, om);
    s.singular_lo = false;
    if (!qa) s.e_q = s.e_p;
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      double jac = n == 2 ? r : 1.0;
      double bq = qa ? P.c_hat * P.a(x, y) * P.Ktq(x, y) : 0.0;
      return Pair(P.Ksp(x, y), bq) * jac;
    };
    return integrate_ray(F, s);
  };
  auto I = sphere(n, ray, false, tol);
  b.Kout_p = I.value(0);
  b.Kout_q = I.value(1);
  b.error += I.error;
}

void exterior_terms(const Point& x, double eta, double kappa, const ProblemParams& P, double tol,
                    BarrierIntegrals& b) {
  const auto& e = P.exponents;
  const int n = e.n;
  const bool qa = P.q_phase();
  const double kb = kappa * barrier_eval(x);
  auto ray = [&](const Point& om) {
    RaySpec s = base_spec(e, tol);
    s.r_lo = ball_exit(x, om);
    s.singular_lo = false;
    s.e_p = e.s * e.p - eta * (e.p - 1.0);
    s.e_q = qa ? e.t * e.q - eta * (e.q - 1.0) : s.e_p;
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      double jac = n == 2 ? r : 1.0;
      double g = kb + 2.0 * std::expm1(eta * std::log(2.0 * (x + y).norm()));
      double bp = abs_pow(g, e.p - 1.0) * P.Ksp(x, y);
      double bq = qa ? P.c_hat * P.a(x, y) * abs_pow(g, e.q - 1.0) * P.Ktq(x, y) : 0.0;
      return Pair(bp, bq) * jac;
    };
    return integrate_ray(F, s);
  };
  auto I = sphere(n, ray, false, tol);
  b.Bp = I.value(0);
  b.Bq = I.value(1);
  b.error += I.error;
}

void growth_terms(const Point& x, double eta, const ProblemParams& P, double tol, BarrierIntegrals& b) {
  const auto& e = P.exponents;
  const int n = e.n;
  auto ray = [&](const Point& om, bool with_a) {
    RaySpec s = base_spec(e, tol);
    s.r_lo = 0.25;
    s.singular_lo = false;
    s.e_p = with_a ? e.t * e.q - eta * (e.q - 1.0) : e.s * e.p - eta * (e.p - 1.0);
    s.e_q = e.t * e.q - eta * (e.q - 1.0);
    auto F = [&](double r) -> Pair {
      Point y = r * om;
      double jac = n == 2 ? r : 1.0;
      double gq = growth_factor(r, eta, e.q) * P.Ktq(x, y);
      if (with_a) return Pair(P.a(x, y) * gq * jac, 0.0);
      return Pair(growth_factor(r, eta, e.p) * P.Ksp(x, y), gq) * jac;
    };
    return integrate_ray(F, s);
  };
  auto I = sphere(n, [&](const Point& om) { return ray(om, false); }, false, tol);
  b.Cp = I.value(0);
  b.Cq = I.value(1);
  b.error += I.error;
  if (P.q_phase()) {
    auto J = sphere(n, [&](const Point& om) { return ray(om, true); }, false, tol);
    b.Cqa = J.value(0);
    b.error += J.error;
  }
}

void check_probe(const Point& x, int n) {
  if (x.size() != n) throw InvalidArgument("probe dimension does not match n");
  if (!(x.norm() < 1.0)) throw InvalidArgument("probe must lie in B_1");
}

Certificate assemble(double epsilon, double kappa, const ProblemParams& P, const std::vector<BarrierIntegrals>& bs) {
  Certificate c;
  c.budget = selection_budget(epsilon, P);
  c.probes = static_cast<int>(bs.size());
  for (Regime r : applicable_regimes(P.exponents)) {
    RegimeCertificate rc;
    rc.regime = r;
    rc.worst.fill(-std::numeric_limits<double>::infinity());
    rc.worst_total = -std::numeric_limits<double>::infinity();
    for (const auto& b : bs) {
      auto t = regime_terms(r, b, kappa, P);
      for (int i = 0; i < TermValues::count; ++i) rc.worst[i] = std::max(rc.worst[i], t.v[i]);
      rc.worst_total = std::max(rc.worst_total, t.total());
    }
    rc.margin = c.budget - rc.worst_total;
    c.regimes.push_back(rc);
  }
  for (const auto& b : bs) c.quad_error = std::max(c.quad_error, b.error);
  return c;
}

double weight_cap(const Exponents& e) {
  // Largest coefficient any bundle puts on a term, used to scale the error estimate.
  return std::max({std::pow(6.0, e.q - 1.0) + std::exp2(2.0 * e.q - 3.0), std::exp2(e.q - 2.0),
                   std::pow(3.0, e.q - 1.0) + std::exp2(e.q - 1.0)});
}

}  // namespace

double sigma(double eta, const ProblemParams& P) {
  const auto& e = P.exponents;
  check_eta(eta, e);
  double Jp = growth_integral(eta, e.p, e.s * e.p);
  double Jq = growth_integral(eta, e.q, e.t * e.q);
  return std::exp2(e.q - 1.0) * omega_n(e.n) * (Jp + Jq);
}

SigmaBand sigma_bounds(double eta, const Exponents& e) {
  const double w = omega_n(e.n), sp = e.s * e.p, tq = e.t * e.q;
  SigmaBand b;
  b.lo = w * std::exp2(e.q - 1.0 + 2.0 * sp) * (std::exp2(eta) - 1.0) / sp;
  double a1 = sp - eta * (e.p - 1.0), a2 = tq - eta * (e.q - 1.0);
  double m = std::max(std::pow(4.0, a1) / a1, (std::pow(4.0, tq) - eta * (e.q - 1.0)) / a2);
  b.hi = w * std::exp2(e.q + 3.0 * eta * (e.q - 1.0)) * m;
  return b;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::P10: return "P10";
    case Regime::P11: return "P11";
    case Regime::P12: return "P12";
  }
  return "?";
}

std::vector<Regime> applicable_regimes(const Exponents& e) {
  std::vector<Regime> out;
  const double p = e.p, q = e.q;
  const bool qt = q > 1.0 / (1.0 - e.t);
  const bool ps = p > 1.0 / (1.0 - e.s);
  if (q >= p && p >= 2.0 && qt) out.push_back(Regime::P10);
  if (q >= 2.0 && 2.0 >= p && ps && qt) out.push_back(Regime::P11);
  if (q < 2.0 && p < 2.0 && ps && qt) out.push_back(Regime::P12);
  return out;
}

double TermValues::total() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

BarrierIntegrals barrier_integrals(const Point& x, double eta, double kappa, const ProblemParams& P,
                                   const CertificateOptions& opt) {
  check_probe(x, P.exponents.n);
  check_eta(eta, P.exponents);
  BarrierIntegrals b;
  b.beta_x = barrier_eval(x);
  inner_terms(x, P, opt.tol, b);
  outer_mass(x, P, opt.tol, b);
  exterior_terms(x, eta, kappa, P, opt.tol, b);
  growth_terms(x, eta, P, opt.tol, b);
  b.error *= weight_cap(P.exponents) * (2.0 + P.M_hat());
  return b;
}

TermValues regime_terms(Regime r, const BarrierIntegrals& b, double kappa, const ProblemParams& P) {
  const auto& e = P.exponents;
  const double p = e.p, q = e.q, ch = P.c_hat, M = P.a.M();
  const double kp = std::pow(kappa, p - 1.0), kq = std::pow(kappa, q - 1.0);
  TermValues t;
  switch (r) {
    case Regime::P10: {
      double w = std::exp2(q - 2.0);
      t.v = {w * kp * b.Ap_signed, w * kq * b.Aq, w * b.Bp, w * b.Bq,
             (2.0 + ch * M) * std::exp2(q - 1.0) * (b.Cp + b.Cq)};
      break;
    }
    case Regime::P11: {
      double c1 = std::pow(6.0, q - 1.0) + std::exp2(2.0 * q - 3.0), w = std::exp2(q - 2.0);
      t.v = {c1 * kp * b.Ap_abs, w * kq * b.Aq, c1 * b.Bp, w * b.Bq,
             std::exp2(q - 1.0) * (std::exp2(q - 2.0) + ch * M) * (b.Cp + b.Cqa)};
      break;
    }
    case Regime::P12: {
      double c = std::pow(3.0, q - 1.0) + std::exp2(q - 1.0);
      t.v = {c * kp * b.Ap_abs, c * kq * b.Aq, c * b.Bp, c * b.Bq,
             std::exp2(q - 1.0) * (1.0 + ch * M) * (b.Cp + ch * b.Cqa)};
      break;
    }
  }
  return t;
}

double selection_budget(double epsilon, const ProblemParams& P) {
  const auto& e = P.exponents;
  return epsilon / (P.Lambda() * std::exp2(e.n + e.s * e.p + e.q));
}

bool Certificate::ok() const {
  for (const auto& r : regimes)
    if (!(r.worst_total <= budget + quad_error)) return false;
  return !regimes.empty();
}

Certificate certify(double epsilon, double eta, double kappa, const ProblemParams& P, const std::vector<Point>& xs,
                    const CertificateOptions& opt) {
  std::vector<BarrierIntegrals> bs;
  bs.reserve(xs.size());
  for (const auto& x : xs) bs.push_back(barrier_integrals(x, eta, kappa, P, opt));
  return assemble(epsilon, kappa, P, bs);
}

Selection choose_eta_kappa(double epsilon, const ProblemParams& P, const SelectionOptions& opt) {
  P.validate();
  if (!(epsilon > 0)) throw InvalidArgument("choose_eta_kappa: epsilon must be positive");
  const auto& e = P.exponents;
  const int n = e.n;
  const auto regimes = applicable_regimes(e);
  if (regimes.empty()) throw SelectionFailed("no estimate bundle applies to these exponents");
  const double tol = opt.quad.tol;
  const double budget = selection_budget(epsilon, P);

  std::vector<Point> xs{Point::Zero(n)};
  for (const auto& z : halton_ball(n, opt.probes, 0.75, Point::Zero(n))) xs.push_back(z);
  std::vector<BarrierIntegrals> bs(xs.size());
  std::vector<double> static_err(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bs[i].beta_x = barrier_eval(xs[i]);
    inner_terms(xs[i], P, tol, bs[i]);
    outer_mass(xs[i], P, tol, bs[i]);
    static_err[i] = bs[i].error;
  }
  const double err_scale = weight_cap(e) * (2.0 + P.M_hat());
  auto refresh = [&](double eta, double kappa) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      BarrierIntegrals& b = bs[i];
      BarrierIntegrals t;
      exterior_terms(xs[i], eta, kappa, P, tol, t);
      growth_terms(xs[i], eta, P, tol, t);
      b.Bp = t.Bp;
      b.Bq = t.Bq;
      b.Cp = t.Cp;
      b.Cq = t.Cq;
      b.Cqa = t.Cqa;
      b.error = (static_err[i] + t.error) * err_scale;
    }
  };

  // eta: the eta-dependent terms at kappa = 0 must fit a tenth of the budget.
  Selection out;
  double eta = 0.5 * std::min(growth_threshold(e, true), 1.0);
  int eh = 0;
  for (;; ++eh) {
    if (eh > opt.max_halvings) throw SelectionFailed("eta search exhausted " + std::to_string(opt.max_halvings) + " halvings");
    refresh(eta, 0.0);
    double worst = 0.0;
    for (Regime r : regimes)
      for (const auto& b : bs) {
        auto t = regime_terms(r, b, 0.0, P);
        worst = std::max(worst, t.v[2] + t.v[3] + t.v[4]);
      }
    spdlog::debug("choose_eta_kappa: eta={} eta-terms={} target={}", eta, worst, budget / 10);
    if (worst <= budget / 10.0) break;
    eta *= 0.5;
  }
  const double sig = sigma(eta, P);

  // c of the kappa-dependent terms: LHS <= c (kappa^{p-1} + sigma^{-(q-p)/(p-1)} kappa^{q-1}).
  const double p = e.p, q = e.q;
  double c = 0.0;
  for (const auto& b : bs) {
    double ap = std::isfinite(b.Ap_abs) ? b.Ap_abs : std::abs(b.Ap_signed);
    double cp = std::exp2(q - 2.0) * ap + std::exp2(p + q - 4.0) * std::pow(b.beta_x, p - 1.0) * b.Kout_p;
    double cq = std::exp2(q - 2.0) * b.Aq + std::exp2(2.0 * q - 4.0) * std::pow(b.beta_x, q - 1.0) * b.Kout_q;
    c = std::max({c, cp, cq * std::pow(sig, (q - p) / (p - 1.0))});
  }
  double cap = c > 0 ? std::pow(sig / (2.0 * c), 1.0 / (p - 1.0)) : 0.5;
  double kappa = std::min(0.5, cap);
  int kh = 0;
  Certificate cert;
  for (;; ++kh) {
    if (kh > opt.max_halvings) throw SelectionFailed("kappa search exhausted " + std::to_string(opt.max_halvings) + " halvings");
    refresh(eta, kappa);
    cert = assemble(epsilon, kappa, P, bs);
    spdlog::debug("choose_eta_kappa: kappa={} ok={}", kappa, cert.ok());
    if (cert.ok()) break;
    kappa *= 0.5;
  }
  cert.eta_halvings = eh;
  cert.kappa_halvings = kh;
  cert.c_com2 = c;
  cert.kappa_cap = cap;
  out.eta = eta;
  out.kappa = kappa;
  out.sigma = sig;
  out.certificate = cert;
  return out;
}

double theta(double kappa) {
  if (!(kappa > 0.0 && kappa <= 0.5)) throw InvalidArgument("theta: kappa must lie in (0, 1/2]");
  return 95.0 * kappa / 256.0;
}

double gamma_exponent(double theta, double eta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidArgument("gamma: theta must lie in (0, 1)");
  if (!(eta > 0.0)) throw InvalidArgument("gamma: eta must be positive");
  double g = std::min({eta, std::log2(2.0 / (2.0 - theta)), std::nextafter(1.0, 0.0)});
  while (std::exp2(-g) < (2.0 - theta) / 2.0) g = std::nextafter(g, 0.0);
  return g;
}

double lambda_rescale(double u_sup, double f_sup, double sigma, double p) {
  if (!(u_sup >= 0.0) || !(f_sup >= 0.0)) throw InvalidArgument("lambda: sup norms must be non-negative");
  if (u_sup == 0.0 && f_sup == 0.0) throw DegenerateScaling("lambda: u and f both vanish");
  if (!(sigma > 0.0)) throw InvalidArgument("lambda: sigma must be positive");
  if (!(p > 1.0)) throw InvalidArgument("lambda: p must exceed 1");
  return 0.5 / (u_sup + std::pow(f_sup / sigma, 1.0 / (p - 1.0)));
}

ConstantsBundle compute_constants(const ProblemParams& P, double epsilon, double u_sup, const SelectionOptions& opt) {
  const auto& e = P.exponents;
  ConstantsBundle c;
  c.epsilon = epsilon > 0 ? epsilon : unit_ball_volume(e.n) / 2.0;
  auto sel = choose_eta_kappa(c.epsilon, P, opt);
  c.eta = sel.eta;
  c.kappa = sel.kappa;
  c.sigma = sel.sigma;
  auto band = sigma_bounds(c.eta, e);
  c.sigma_lo = band.lo;
  c.sigma_hi = band.hi;
  c.sigma_in_band = band.lo <= c.sigma && c.sigma <= band.hi;
  if (!c.sigma_in_band)
    spdlog::warn("sigma={} outside the closed-form band [{}, {}]", c.sigma, band.lo, band.hi);
  c.theta = theta(c.kappa);
  c.gamma = gamma_exponent(c.theta, c.eta);
  if (u_sup >= 0.0) c.lambda = lambda_rescale(u_sup, P.f.sup, c.sigma, e.p);
  c.omega_n = omega_n(e.n);
  c.experimental = P.homogeneous;
  c.certificate = sel.certificate;
  return c;
}

}  // namespace nldp
