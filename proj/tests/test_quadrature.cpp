#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "nldp/quadrature.hpp"

using namespace nldp;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  for (int n : {1, 2, 4, 7}) {
    const auto& r = quad::gauss_legendre(n);
    for (int d = 0; d < 2 * n; ++d) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += r.w[k] * std::pow(r.x[k], d);
      double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("adaptive gauss-kronrod with kink") {
  auto f = [](double x) { return std::abs(x - 0.3) + std::cos(x); };
  auto I = quad::adaptive<double>(f, {0.0, 1.0}, 1e-12);
  double exact = (0.09 + 0.49) / 2 + std::sin(1.0);
  CHECK(I.value == doctest::Approx(exact).epsilon(1e-11));
  CHECK(I.error < 1e-10);
}

TEST_CASE("tanh-sinh with algebraic endpoint singularity") {
  for (double al : {-0.9, -0.5, -0.2, 0.3}) {
    auto f = [al](double y) { return std::pow(y, al) * std::exp(-y); };
    auto I = quad::tanh_sinh<double>(f, 0.0, 2.0, 1e-12);
    boost::math::quadrature::tanh_sinh<double> ts;
    double ref = ts.integrate(f, 0.0, 2.0);
    CHECK(I.value == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("mapped tail") {
  for (double e : {0.4, 1.2, 2.0}) {
    auto f = [e](double r) { return std::pow(r, -1 - e) * std::log(1 + r); };
    auto I = quad::tail<double>(f, 3.0, e, 1e-12);
    boost::math::quadrature::exp_sinh<double> es;
    double ref = es.integrate(f, 3.0, std::numeric_limits<double>::infinity());
    CHECK(I.value == doctest::Approx(ref).epsilon(1e-9));
  }
}
