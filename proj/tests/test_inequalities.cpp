#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <random>

#include "nldp/inequalities.hpp"
#include "nldp/power.hpp"
#include "nldp/probes.hpp"

using namespace nldp;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log_report(const IneqReport& r) {
  std::string w;
  for (double v : r.witness) w += std::to_string(v) + " ";
  MESSAGE(r.name << ": " << r.samples << " draws, " << r.violations << " violations, worst slack " << r.worst_slack
                 << " at [ " << w << "]");
}

}  // namespace

TEST_CASE("revL1 examples and domain") {
  CHECK(check_revL1(1.5, 0.25, 2.0) == 0.0);
  CHECK(check_revL1(-3.0, 0.75, 2.0) == 0.0);
  for (double r : {2.0, 2.5, 3.7}) CHECK(check_revL1(1.0, 0.0, r) == 0.0);
  CHECK(check_revL1(2.0, 1.0, 3.0) == doctest::Approx(2.0 * 3.0 - (9.0 - 4.0)));
  CHECK_THROWS_AS(check_revL1(1.0, 1.0, 1.9), InvalidArgument);
}

TEST_CASE("superlinear examples and domain") {
  CHECK(check_superlinear(1.0, 1.0, 2.0, 2.0) == 0.0);
  CHECK(check_superlinear(1.0, -1.0, 2.5, 3.0) == 0.0);
  // r = q = 3 at a = b = 1: 4 <= 2 (1 + 1)
  CHECK(check_superlinear(1.0, 1.0, 3.0, 3.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(check_superlinear(2.0, 0.0, 2.0, 3.0) == doctest::Approx(4.0 - 2.0));
  CHECK_THROWS_AS(check_superlinear(1.0, -1.5, 2.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(check_superlinear(1.0, 1.0, 3.0, 2.5), InvalidArgument);
}

TEST_CASE("singular examples and domain") {
  CHECK(check_singular(0.0, 1.0, 1.5, 1.5) == doctest::Approx(std::sqrt(3.0) + std::sqrt(2.0) - 1.0).epsilon(1e-15));
  CHECK(check_singular(0.7, 0.0, 1.5, 1.8) == 0.0);
  CHECK(check_singular(0.0, 0.0, 1.2, 1.2) == 0.0);
  // r = 2 reduces to |b| <= (3^{q-1} + 2^{q-1}) |b|
  CHECK(check_singular(5.0, -2.0, 2.0, 3.0) == doctest::Approx((9.0 + 4.0) * 2.0 - 2.0));
  CHECK_THROWS_AS(check_singular(1.0, 1.0, 2.5, 3.0), InvalidArgument);
  CHECK_THROWS_AS(check_singular(1.0, 1.0, 1.5, 1.2), InvalidArgument);
}

TEST_CASE("power-map convention at zero") {
  CHECK(power_map(0.0, 1.3) == 0.0);
  CHECK(power_map(0.0, 1.01) == 0.0);
  CHECK(power_map(-0.0, 1.5) == 0.0);
  CHECK(std::isfinite(check_singular(-1.0, 1.0, 1.1, 1.1)));
}

TEST_CASE("fuzz campaigns report no violations") {
  FuzzOptions opt;
  auto t0 = std::chrono::steady_clock::now();
  auto reports = fuzz_all(opt);
  MESSAGE("four campaigns in " << seconds_since(t0) << " s");
  REQUIRE(reports.size() == 4);
  for (const auto& r : reports) {
    log_report(r);
    CHECK(r.samples == opt.draws);
    CHECK(r.violations == 0);
    CHECK(r.worst_slack > -1e-9);
    CHECK(!r.witness.empty());
  }
  const auto& sing = reports[2];
  MESSAGE("singular: largest LHS/|b|^{r-1} as a fraction of the constant " << sing.max_ratio);
  CHECK(sing.max_ratio > 0.0);
  CHECK(sing.max_ratio < 1.0);
}

TEST_CASE("campaigns are reproducible and chunking-independent in totals") {
  FuzzOptions a;
  a.draws = 20000;
  auto r1 = fuzz_revL1(a), r2 = fuzz_revL1(a);
  CHECK(r1.worst_slack == r2.worst_slack);
  CHECK(r1.witness == r2.witness);
  a.chunks = 7;
  CHECK(fuzz_revL1(a).samples == 20000);
}

TEST_CASE("singular constant against the sharp value 2^{2-r}") {
  // |phi_r(a + b) - phi_r(a)| / |b|^{r-1} peaks at a = -b/2 with value 2^{2-r}
  for (double r : {1.1, 1.5, 1.9}) {
    double lhs = std::abs(power_map(0.5, r) - power_map(-0.5, r));
    CHECK(lhs == doctest::Approx(std::exp2(2.0 - r)).epsilon(1e-14));
    CHECK(check_singular(-0.5, 1.0, r, r) == doctest::Approx(std::pow(3.0, r - 1) + std::pow(2.0, r - 1) - lhs));
  }
}

TEST_CASE("C2 bounds for the barrier") {
  auto beta = C2Function::barrier();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int count = 0;
  for (int n = 1; n <= 2; ++n) {
    for (int k = 0; k < 1000; ++k) {
      Point x(n), y(n);
      for (int d = 0; d < n; ++d) x(d) = 1.2 * U(rng);
      y = random_ball(n, 1, 1.0, rng)[0];
      auto b = check_C2_bounds(beta, x, y, C2Mode::Rev3, 2.0);
      // direct second difference
      double direct = 2.0 * beta(x) - beta(Point(x + y)) - beta(Point(x - y));
      CHECK(std::abs(b.lhs - direct) <= 1e-14);
      CHECK(b.constant == 8.0);
      count += b.slack() >= 0.0;
    }
  }
  CHECK(count == 2000);
  Point x = point(0.3), z = point(0.0);
  for (auto mode : {C2Mode::Rev3, C2Mode::Rev10}) {
    auto b = check_C2_bounds(beta, x, z, mode, mode == C2Mode::Rev3 ? 2.4 : 1.5);
    CHECK(b.lhs == 0.0);
    CHECK(b.rhs == 0.0);
  }
}

TEST_CASE("C2 bounds vanish for affine functions") {
  auto lin = C2Function::affine(point(0.7, -1.9), 0.4);
  auto a = CoefficientField::constant(1.3);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 500; ++k) {
    Point x = random_ball(2, 1, 3.0, rng)[0], y = random_ball(2, 1, 5.0, rng)[0];
    CHECK(check_C2_bounds(lin, x, y, C2Mode::Rev3, 2.0 + 2.0 * k / 500.0).lhs == 0.0);
    CHECK(check_C2_bounds(lin, x, y, C2Mode::Rev30, 3.1, a).lhs == 0.0);
  }
}

TEST_CASE("C2 q-modes") {
  auto phi = C2Function::cosine(2.0);
  auto h = CoefficientField::holder(0.5, 1.0);
  Point x = point(0.4), y = point(0.1);
  auto b = check_C2_bounds(phi, x, y, C2Mode::Rev11, 1.5, h);
  double dp = std::cos(0.8) - std::cos(1.0), dm = std::cos(0.8) - std::cos(0.6);
  double direct = std::sqrt(0.3) * power_map(dp, 1.5) + std::sqrt(0.5) * power_map(dm, 1.5);
  CHECK(b.lhs == doctest::Approx(direct).epsilon(1e-13));
  CHECK(b.constant == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(b.slack() >= 0.0);
  CHECK_THROWS_AS(check_C2_bounds(phi, x, y, C2Mode::Rev30, 2.5, h), InvalidArgument);
  CHECK_THROWS_AS(check_C2_bounds(phi, x, y, C2Mode::Rev10, 2.5), InvalidArgument);
  CHECK_THROWS_AS(check_C2_bounds(phi, x, y, C2Mode::Rev3, 1.5), InvalidArgument);
}

TEST_CASE("local integrability of the barrier, p = 2") {
  auto P = ProblemParams::model({1, 0.6, 0.5, 2.0, 2.2});
  auto beta = C2Function::barrier();
  auto r = check_local_integrability(beta, P, LocalMode::Rev5);
  // 2 int_0^1 (4 y^2 - 2 y^4) y^{-2.2} dy
  const double exact = 2.0 * (4.0 / 0.8 - 2.0 / 2.8);
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-8));
  CHECK(r.rel_change <= 1e-3);

  IntegrabilityOptions o;
  o.x = point(0.3);
  auto r3 = check_local_integrability(beta, P, LocalMode::Rev5, o);
  // factored second difference while both x +- y stay in B_1
  auto S = [](double y) {
    const double x = 0.3, w = 1.0 - x * x;
    if (x + y < 1.0) return std::abs(y * y * (4.0 * w - 8.0 * x * x - 2.0 * y * y));
    return std::abs(2.0 * w * w - barrier_eval(point(x - y)));
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  // y = u^5 removes the endpoint singularity
  auto g = [&](double u) { return u < 1e-20 ? 0.0 : 5.0 * S(std::pow(u, 5)) * std::pow(u, -7.0); };
  double oracle = 2.0 * (ts.integrate(g, 0.0, std::pow(0.7, 0.2)) + ts.integrate(g, std::pow(0.7, 0.2), 1.0));
  CHECK(r3.value == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("local integrability: constant, 2D, Holder and symmetric coefficients") {
  auto P = ProblemParams::model({1, 0.6, 0.5, 2.0, 2.2}, CoefficientField::holder(0.5, 1.0));
  CHECK(check_local_integrability(C2Function::constant(3.0), P, LocalMode::Rev5).value == 0.0);

  IntegrabilityOptions o;
  o.x = point(0.3);
  o.alpha = 0.5;
  auto r8 = check_local_integrability(C2Function::barrier(), P, LocalMode::Rev8, o);
  const double q = 2.2;
  // beta(x) - beta(x +- y) in factored form inside B_1
  auto D = [](double x, double y) {
    double w = 1.0 - x * x;
    if (std::abs(x + y) < 1.0) return -(2.0 * x * y + y * y) * (-2.0 * w + 2.0 * x * y + y * y);
    return w * w;
  };
  auto T = [&](double y) {
    double ap = std::min(std::sqrt(std::abs(0.3 - y)), 1.0), am = std::min(std::sqrt(std::abs(0.3 + y)), 1.0);
    return std::abs(ap * power_map(D(0.3, y), q) + am * power_map(D(0.3, -y), q)) * std::pow(std::abs(y), -1.0 - 0.5 * q);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  auto g = [&](double u) { return u < 1e-20 ? 0.0 : 5.0 * std::pow(u, 4) * T(std::pow(u, 5)); };
  double br1 = std::pow(0.3, 0.2), br2 = std::pow(0.7, 0.2);
  // T is even in y
  double oracle = 2.0 * (ts.integrate(g, 0.0, br1) + ts.integrate(g, br1, br2) + ts.integrate(g, br2, 1.0));
  CHECK(r8.value == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(std::isfinite(check_local_integrability(C2Function::barrier(), P, LocalMode::Rev6, o).value));
  CHECK_THROWS_AS(check_local_integrability(C2Function::barrier(), P, LocalMode::Rev31, o), InvalidArgument);
  IntegrabilityOptions no_alpha;
  CHECK_THROWS_AS(check_local_integrability(C2Function::barrier(), P, LocalMode::Rev8, no_alpha), InvalidArgument);

  auto P2 = ProblemParams::model({2, 0.6, 0.5, 2.0, 2.2}, CoefficientField::constant(0.8));
  IntegrabilityOptions o2;
  o2.x = point(0.2, -0.1);
  auto r31 = check_local_integrability(C2Function::barrier(), P2, LocalMode::Rev31, o2);
  CHECK(std::isfinite(r31.value));
  CHECK(r31.value > 0.0);
  // at the origin the integrand is radial, 2 pi int_0^1 (4 r^2 - 2 r^4) r^{-3.2} r dr
  auto r5 = check_local_integrability(C2Function::barrier(), P2, LocalMode::Rev5);
  CHECK(r5.value == doctest::Approx(2.0 * M_PI * (4.0 / 0.8 - 2.0 / 2.8)).epsilon(1e-8));
}

TEST_CASE("local integrability: the rev9 threshold is sharp for Lipschitz data") {
  C2Function kink;
  kink.f = [](const Point& x) { return std::abs(x(0)); };
  kink.c0 = std::numeric_limits<double>::infinity();
  kink.c1 = 1.0;
  kink.c2 = std::numeric_limits<double>::infinity();
  kink.name = "abs";
  // integrand 2 |y|^{p-2-sp}: finite iff p (1 - s) > 1
  auto ok = ProblemParams::model({1, 0.4, 0.4, 1.9, 1.9});
  auto r = check_local_integrability(kink, ok, LocalMode::Rev9);
  const double e = 1.9 - 1.0 - 0.4 * 1.9;
  CHECK(r.value == doctest::Approx(2.0 * 2.0 / e).epsilon(1e-6));

  auto bad = ProblemParams::model({1, 0.5, 0.5, 1.5, 1.5}, CoefficientField::zero());
  CHECK_THROWS_AS(check_local_integrability(kink, bad, LocalMode::Rev9), InvalidArgument);
  IntegrabilityOptions o;
  o.enforce_hypotheses = false;
  CHECK_THROWS_AS(check_local_integrability(kink, bad, LocalMode::Rev9, o), DivergenceDetected);
  // logarithmic divergence at p (1 - s) = 1
  auto edge = ProblemParams::model({1, 0.5, 0.5, 2.0, 2.0});
  CHECK_THROWS_AS(check_local_integrability(kink, edge, LocalMode::Rev9, o), DivergenceDetected);
}
