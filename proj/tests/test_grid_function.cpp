#include <doctest.h>

#include <cmath>

#include "nldp/grid_function.hpp"
#include "nldp/power.hpp"

using namespace nldp;

TEST_CASE("not-a-knot spline reproduces cubics") {
  auto cubic = [](const Point& x) { return 1 + x(0) - 2 * x(0) * x(0) + 0.5 * std::pow(x(0), 3); };
  auto u = GridFunction::sample(1, 1.0, 11, cubic, Exterior::constant(0));
  for (double x = -1; x <= 1; x += 0.0137) CHECK(u(point(x)) == doctest::Approx(cubic(point(x))).epsilon(1e-12));
  auto c2 = [](const Point& x) { return x(0) * x(0) * x(1) - std::pow(x(1), 3) + x(0) * x(1); };
  auto v = GridFunction::sample(2, 1.0, 9, c2, Exterior::constant(0));
  for (double a = -0.95; a < 1; a += 0.173)
    for (double b = -0.95; b < 1; b += 0.191)
      CHECK(v(point(a, b)) == doctest::Approx(c2(point(a, b))).epsilon(1e-11));
}

TEST_CASE("spline accuracy and exterior") {
  auto f = [](const Point& x) { return std::sin(3 * x(0)); };
  auto u = GridFunction::sample(1, 1.0, 201, f, Exterior::constant(7));
  double e = 0;
  for (double x = -1; x <= 1; x += 0.00123) e = std::max(e, std::abs(u(point(x)) - f(point(x))));
  CHECK(e < 1e-8);
  CHECK(u(point(1.5)) == 7.0);
  auto lin = GridFunction::sample(1, 1.0, 201, f, Exterior::constant(0), Interp::linear);
  CHECK(std::abs(lin(point(0.0037)) - f(point(0.0037))) < 1e-3);
}

TEST_CASE("affine re-indexing is exact") {
  auto u = GridFunction::sample(1, 2.0, 65, [](const Point& x) { return barrier_eval(x); }, Exterior::constant(0));
  auto w = u.transformed(3.0, 0.25, point(0.5), 0.1);
  for (double x = -5; x <= 5; x += 0.37) {
    double ref = 3.0 * (u(point(0.25 * x + 0.5)) - 0.1);
    CHECK(w(point(x)) == doctest::Approx(ref).epsilon(1e-12));
  }
  for (double x : {-20.0, 30.0}) CHECK(w(point(x)) == doctest::Approx(-0.3));
}
