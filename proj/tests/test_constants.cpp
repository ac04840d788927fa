#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <random>

#include "nldp/constants.hpp"
#include "nldp/power.hpp"
#include "nldp/probes.hpp"

using namespace nldp;

namespace {

const Exponents desk{1, 0.6, 0.5, 2.0, 2.2};

ProblemParams desk_params() { return ProblemParams::model(desk, CoefficientField::constant(1.0)); }

// sigma with z = log(8r): 2^{q-1} omega sum 8^alpha int_{log 2}^inf (e^{eta z} - 1)^{rho-1} e^{-alpha z} dz
double sigma_oracle(double eta, const Exponents& e) {
  boost::math::quadrature::exp_sinh<double> es;
  auto part = [&](double rho, double alpha) {
    auto f = [&](double z) {
      double u = eta * (z + std::log(2.0));
      double lg = u + std::log1p(-std::exp(-u));  // log(e^u - 1)
      return std::exp((rho - 1.0) * lg - alpha * z);
    };
    // shifted so the lower limit is 0
    return std::pow(8.0, alpha) * std::exp(-alpha * std::log(2.0)) * es.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
  };
  return std::exp2(e.q - 1.0) * omega_n(e.n) * (part(e.p, e.s * e.p) + part(e.q, e.t * e.q));
}

}  // namespace

TEST_CASE("sigma against an independent radial quadrature") {
  auto P = desk_params();
  double s = sigma(0.01, P);
  double o = sigma_oracle(0.01, desk);
  CHECK(std::abs(s - o) <= 1e-10 * o);
  CHECK(s == doctest::Approx(0.45244400334122264).epsilon(1e-10));
  auto P2 = ProblemParams::model({2, 0.7, 0.5, 1.8, 2.1});
  CHECK(std::abs(sigma(0.05, P2) - sigma_oracle(0.05, P2.exponents)) <= 1e-10 * sigma(0.05, P2));
}

TEST_CASE("sigma monotone in eta and guarded at the threshold") {
  auto P = desk_params();
  CHECK(sigma(1e-4, P) < sigma(1e-3, P));
  CHECK(sigma(1e-3, P) < sigma(1e-2, P));
  double th = growth_threshold(desk, true);
  double prev = 0.0;
  for (int k = 1; k <= 20; ++k) {
    double v = sigma(th * k / 21.0, P);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(sigma(th, P), DivergentSigma);
  CHECK_THROWS_AS(sigma(0.0, P), DivergentSigma);
}

TEST_CASE("sigma band") {
  auto b0 = sigma_bounds(0.0, desk);
  CHECK(b0.lo == 0.0);
  auto b = sigma_bounds(0.01, desk);
  CHECK(b.lo == doctest::Approx(2.0 * std::exp2(1.2 + 2.4) * (std::exp2(0.01) - 1.0) / 1.2).epsilon(1e-14));
  double s = sigma(0.01, desk_params());
  CHECK(b.lo <= s);
  CHECK(s <= b.hi);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  int done = 0;
  while (done < 100) {
    Exponents e{1 + int(U(rng) < 0.5), 0.05 + 0.9 * U(rng), 0.05 + 0.9 * U(rng), 1.1 + 3 * U(rng), 0.0};
    e.q = e.p * (1 + U(rng));
    if (!validate_exponents(e).ok) continue;
    double eta = growth_threshold(e, true) * (0.01 + 0.98 * U(rng));
    auto bb = sigma_bounds(eta, e);
    CHECK(bb.hi >= bb.lo);
    ++done;
  }
}

TEST_CASE("regime routing") {
  auto has = [](const Exponents& e, Regime r) {
    auto v = applicable_regimes(e);
    return std::find(v.begin(), v.end(), r) != v.end();
  };
  CHECK(has(desk, Regime::P10));
  CHECK(applicable_regimes(desk).size() == 1);
  Exponents e11{1, 0.45, 0.4, 1.9, 2.1};
  REQUIRE(validate_exponents(e11).ok);
  CHECK(applicable_regimes(e11) == std::vector<Regime>{Regime::P11});
  Exponents e12{1, 0.4, 0.35, 1.8, 1.9};
  REQUIRE(validate_exponents(e12).ok);
  CHECK(applicable_regimes(e12) == std::vector<Regime>{Regime::P12});
}

TEST_CASE("barrier integrals against Boost at one point") {
  const double x = 0.3, w = 1 - x * x;
  auto P = desk_params();
  auto b = barrier_integrals(point(x), 0.01, 0.1, P);
  boost::math::quadrature::tanh_sinh<double> ts(15);
  boost::math::quadrature::exp_sinh<double> es;
  const double sp = 1.2, tq = 1.1;
  // p = 2: paired second difference, then the one-sided part
  auto sym = [&](double y) {
    if (!(y > 1e-100)) return 0.0;
    return y * y * (4 * w - 8 * x * x - 2 * y * y) * std::pow(y, -1 - sp);
  };
  auto one = [&](double y) { return (barrier_eval(point(x)) - barrier_eval(point(x + y))) * std::pow(std::abs(y), -1 - sp); };
  double ap = ts.integrate(sym, 0.0, 1 - x, 1e-14) + ts.integrate(one, -1 - x, -(1 - x), 1e-14);
  CHECK(b.Ap_signed == doctest::Approx(ap).epsilon(1e-8));
  CHECK(std::isinf(b.Ap_abs));
  // q-part with a = 1. Near y = 0 the integrand is |y|^{-0.9} h(y) with h = |dbeta / y|^{1.2} smooth, so y = u^10
  // makes it regular; the outer piece has a kink where beta(x + y) = beta(x).
  auto h = [&](double y) { return std::pow(std::abs(4 * w * x + 2 * w * y - y * (2 * x + y) * (2 * x + y)), 1.2); };
  auto aq = [&](double y) { return std::pow(std::abs(barrier_eval(point(x)) - barrier_eval(point(x + y))), 1.2) * std::pow(std::abs(y), -1 - tq); };
  auto near = [&](int sgn, double L) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double u) { return 10 * h(sgn * std::pow(u, 10)); }, 0.0, std::pow(L, 0.1), 20, 1e-15);
  };
  double Aq = near(1, 1 - x) + near(-1, x) + ts.integrate([&](double y) { return aq(-y); }, x, 2 * x, 1e-15) +
              ts.integrate([&](double y) { return aq(-y); }, 2 * x, 1 + x, 1e-15);
  CHECK(b.Aq == doctest::Approx(Aq).epsilon(1e-8));
  // exterior terms at eta = 0.01, kappa = 0.1
  const double kb = 0.1 * barrier_eval(point(x)), eta = 0.01;
  auto ext = [&](double z, double rho, double alpha) {  // z = |x + y| >= 1
    double g = kb + 2 * std::expm1(eta * std::log(2 * z));
    auto k = [&](double y) { return std::pow(std::abs(y), -1 - alpha); };
    return std::pow(g, rho - 1) * (k(z - x) + k(z + x));
  };
  auto inf = std::numeric_limits<double>::infinity();
  double Bp = es.integrate([&](double z) { return ext(z, 2.0, sp); }, 1.0, inf, 1e-14);
  double Bq = es.integrate([&](double z) { return ext(z, 2.2, tq); }, 1.0, inf, 1e-14);
  CHECK(b.Bp == doctest::Approx(Bp).epsilon(1e-8));
  CHECK(b.Bq == doctest::Approx(Bq).epsilon(1e-8));
  auto grow = [&](double rho, double alpha) {
    auto f = [&](double r) { return 2 * std::pow(std::expm1(eta * std::log(8 * r)), rho - 1) * std::pow(r, -1 - alpha); };
    return es.integrate(f, 0.25, inf, 1e-14);
  };
  CHECK(b.Cp == doctest::Approx(grow(2.0, sp)).epsilon(1e-8));
  CHECK(b.Cq == doctest::Approx(grow(2.2, tq)).epsilon(1e-8));
  CHECK(b.Cqa == doctest::Approx(b.Cq).epsilon(1e-12));
}

TEST_CASE("term III shrinks with eta") {
  auto P = desk_params();
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.2, 0.1, 0.05}) {
    auto b = barrier_integrals(point(0.2), eta, 0.1, P);
    double III = regime_terms(Regime::P10, b, 0.1, P).v[4];
    CHECK(III < prev);
    prev = III;
  }
}

TEST_CASE("2D barrier integrals are finite and symmetric in the probe") {
  auto P = ProblemParams::model({2, 0.6, 0.5, 2.0, 2.2}, CoefficientField::constant(1.0));
  CertificateOptions opt;
  opt.tol = 1e-7;
  auto a = barrier_integrals(point(0.3, 0.0), 0.05, 0.1, P, opt);
  auto b = barrier_integrals(point(0.0, -0.3), 0.05, 0.1, P, opt);
  CHECK(std::isfinite(a.Ap_signed));
  CHECK(a.Ap_signed == doctest::Approx(b.Ap_signed).epsilon(1e-5));
  CHECK(a.Bp == doctest::Approx(b.Bp).epsilon(1e-5));
  CHECK(a.Cp == doctest::Approx(b.Cp).epsilon(1e-6));
}

TEST_CASE("eta/kappa selection for the desk-scale parameters") {
  auto P = ProblemParams::model(desk, CoefficientField::constant(1.0), 1.0);
  const double eps = unit_ball_volume(1) / 2;
  auto t0 = std::chrono::steady_clock::now();
  auto sel = choose_eta_kappa(eps, P);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("eta=" << sel.eta << " kappa=" << sel.kappa << " sigma=" << sel.sigma << " seconds=" << secs);
  CHECK(sel.certificate.ok());
  CHECK(sel.certificate.probes == 33);
  CHECK(sel.kappa > 0);
  CHECK(sel.kappa <= 0.5);
  CHECK(sel.eta < growth_threshold(desk, true));
  CHECK(sel.kappa <= sel.certificate.kappa_cap * (1 + 1e-12));
  CHECK(sel.certificate.kappa_cap == doctest::Approx(sel.sigma / (2 * sel.certificate.c_com2)));
  std::mt19937_64 rng(77);
  auto fresh = random_ball(1, 32, 0.75, rng);
  auto cert = certify(eps, sel.eta, sel.kappa, P, fresh);
  CHECK(cert.ok());
  for (const auto& r : cert.regimes) CHECK(r.worst_total <= cert.budget + cert.quad_error);
}

TEST_CASE("selection in the sub-quadratic regimes") {
  for (Exponents e : {Exponents{1, 0.45, 0.4, 1.9, 2.1}, Exponents{1, 0.4, 0.35, 1.8, 1.9}}) {
    auto P = ProblemParams::model(e, CoefficientField::constant(0.5));
    SelectionOptions opt;
    opt.probes = 8;
    auto sel = choose_eta_kappa(1.0, P, opt);
    CHECK(sel.certificate.ok());
    CHECK(sel.certificate.regimes.size() == 1);
    CHECK(sel.kappa <= sel.certificate.kappa_cap * (1 + 1e-12));
  }
}

TEST_CASE("theta gamma lambda") {
  CHECK(theta(0.1) == 0.037109375);
  for (double k : {0.5, 0.1, 1e-6})
    CHECK(theta(k) == doctest::Approx(k * (barrier_eval(point(0.5)) - barrier_eval(point(0.75)))).epsilon(1e-15));
  CHECK_THROWS_AS(theta(0.0), InvalidArgument);
  CHECK_THROWS_AS(theta(0.6), InvalidArgument);

  double g = gamma_exponent(0.037109375, 0.5);
  CHECK(g == doctest::Approx(std::log2(2.0 / 1.962890625)).epsilon(1e-15));
  CHECK(g == doctest::Approx(0.027022).epsilon(1e-4));
  CHECK(gamma_exponent(0.037109375, 1e-6) == 1e-6);
  for (double th : {0.01, 0.2, 0.9})
    for (double eta : {1e-4, 0.05, 0.8}) {
      double gg = gamma_exponent(th, eta);
      CHECK((2 - th) / 2 <= std::exp2(-gg));
      CHECK(gg <= eta);
      CHECK(gg > 0);
      CHECK(gg < 1);
    }

  CHECK(lambda_rescale(1, 0, 0.3, 2) == 0.5);
  CHECK(lambda_rescale(0, 0.3, 0.3, 2) == 0.5);
  CHECK(lambda_rescale(1, 4 * 0.3, 0.3, 2) == doctest::Approx(0.1));
  CHECK(lambda_rescale(1, 4 * 0.3, 0.3, 3) == doctest::Approx(1.0 / 6));
  CHECK_THROWS_AS(lambda_rescale(0, 0, 0.3, 2), DegenerateScaling);
}

TEST_CASE("constants bundle") {
  auto P = ProblemParams::model(desk, CoefficientField::constant(1.0), 1.0, SourceTerm::constant(0.01));
  SelectionOptions opt;
  opt.probes = 8;
  auto c = compute_constants(P, 0.0, 1.0, opt);
  CHECK(c.epsilon == 1.0);
  CHECK(c.omega_n == 2.0);
  CHECK(c.theta == 95 * c.kappa / 256);
  CHECK(c.gamma <= c.eta);
  CHECK((2 - c.theta) / 2 <= std::exp2(-c.gamma));
  CHECK(c.sigma_lo <= c.sigma);
  CHECK(c.lambda == doctest::Approx(0.5 / (1 + 0.01 / c.sigma)));
  CHECK(!c.experimental);
}
