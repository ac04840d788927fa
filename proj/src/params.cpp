#include "nldp/params.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nldp/probes.hpp"

namespace nldp {

std::vector<Point> halton_ball(int n, std::size_t count, double radius, const Point& center,
                               std::uint64_t skip) {
  std::vector<Point> out;
  out.reserve(count);
  for (std::uint64_t i = skip; out.size() < count; ++i) {
    Point z(n);
    if (n == 1) {
      z(0) = radius * (2.0 * radical_inverse(i, 2) - 1.0);
    } else {
      double r = radius * std::sqrt(radical_inverse(i, 2));
      double th = 2.0 * std::numbers::pi * radical_inverse(i, 3);
      z << r * std::cos(th), r * std::sin(th);
    }
    out.push_back(center + z);
  }
  return out;
}

std::vector<Point> random_ball(int n, std::size_t count, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(count);
  while (out.size() < count) {
    if (n == 1) {
      out.push_back(point(radius * (2.0 * U(rng) - 1.0)));
    } else {
      double r = radius * std::sqrt(U(rng)), th = 2.0 * std::numbers::pi * U(rng);
      out.push_back(point(r * std::cos(th), r * std::sin(th)));
    }
  }
  return out;
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::atomic<bool> kernel_warned{false};

}  // namespace

ValidationReport validate_exponents(const Exponents& e, bool homogeneous) {
  ValidationReport r;
  auto fail = [&](std::string msg) {
    r.ok = false;
    r.violations.push_back(std::move(msg));
  };
  for (double v : {e.s, e.t, e.p, e.q})
    if (!std::isfinite(v)) {
      fail("non-finite exponent");
      return r;
    }
  if (e.n != 1 && e.n != 2) fail("n must be 1 or 2, got " + std::to_string(e.n));
  if (!(e.s > 0 && e.s < 1)) fail("0 < s < 1 violated: s=" + fmt_num(e.s));
  if (!(e.t > 0 && e.t < 1)) fail("0 < t < 1 violated: t=" + fmt_num(e.t));
  if (!(e.p > 1)) fail("p > 1 violated: p=" + fmt_num(e.p));
  if (!(e.p <= e.q)) fail("p <= q violated: p=" + fmt_num(e.p) + ", q=" + fmt_num(e.q));
  if (!r.ok) return r;
  if (e.p < 2 && !(e.p > 1.0 / (1.0 - e.s)))
    fail("p < 2 requires p > 1/(1-s): p=" + fmt_num(e.p) + " <= " + fmt_num(1.0 / (1.0 - e.s)));
  if (!(e.q > 1.0 / (1.0 - e.t)))
    fail("q > 1/(1-t) violated: q=" + fmt_num(e.q) + " <= " + fmt_num(1.0 / (1.0 - e.t)));
  double ratio = e.q / e.p;
  double cap = homogeneous ? e.s / e.t : std::min(e.s / e.t, 1.0 + e.s);
  if (!(ratio <= cap * (1.0 + 1e-15)))
    fail("q/p <= min{s/t, 1+s} violated: q/p=" + fmt_num(ratio) + " > " + fmt_num(cap));
  return r;
}

double growth_threshold(const Exponents& e, bool q_phase) {
  double th = e.s * e.p / (e.p - 1.0);
  if (q_phase) th = std::min(th, e.t * e.q / (e.q - 1.0));
  return th;
}

KernelField::KernelField() : KernelField(gagliardo_kernel(1, {})) {}

KernelField::KernelField(int n, KernelOrder order, double Lambda, Modulation c, std::string tag,
                         bool translation_invariant, bool probe)
    : n_(n),
      order_(order),
      Lambda_(Lambda),
      c_(std::make_shared<const Modulation>(std::move(c))),
      tag_(std::move(tag)),
      gagliardo_(false),
      translation_invariant_(translation_invariant) {
  if (!(Lambda >= 1.0)) throw InvalidArgument("kernel: Lambda must be >= 1");
  if (probe) probe_bounds();
}

double KernelField::modulation(const Point& x, const Point& y) const {
  if (gagliardo_) return 1.0;
  double c = (*c_)(x, y);
  if ((c < 1.0 / Lambda_ * (1 - 1e-12) || c > Lambda_ * (1 + 1e-12)) && !kernel_warned.exchange(true))
    spdlog::warn("kernel '{}' leaves its declared bounds at a quadrature node (c={})", tag_, c);
  return c;
}

double KernelField::operator()(const Point& x, const Point& y) const {
  double r = y.norm();
  double e = n_ + sp();
  double g = n_ == 1 && e == 2.0 ? 1.0 / (r * r) : std::pow(r, -e);
  return gagliardo_ ? g : modulation(x, y) * g;
}

KernelField KernelField::with_order(KernelOrder order) const {
  KernelField k = *this;
  k.order_ = order;
  return k;
}

KernelField KernelField::transformed(double mu, const Point& x0) const {
  if (gagliardo_) return *this;
  if (mu == 1.0 && x0.isZero()) return *this;
  auto c = c_;
  Point z = x0;
  KernelField k = *this;
  k.c_ = std::make_shared<const Modulation>(
      [c, mu, z](const Point& x, const Point& y) { return (*c)(mu * x + z, mu * y); });
  k.tag_ = tag_ + "|scaled";
  return k;
}

void KernelField::probe_bounds(unsigned long long seed) const {
  if (gagliardo_) return;
  auto rng = rng_stream(seed, 1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Point x(n_), y(n_);
    for (int d = 0; d < n_; ++d) x(d) = 2.0 * U(rng);
    double r = std::pow(10.0, 3.0 * U(rng));
    for (int d = 0; d < n_; ++d) y(d) = U(rng);
    if (y.norm() == 0.0) y(0) = 1.0;
    y *= r / y.norm();
    double c = (*c_)(x, y), cm = (*c_)(x, Point(-y));
    if (!(c >= 1.0 / Lambda_ * (1 - 1e-12) && c <= Lambda_ * (1 + 1e-12)))
      throw KernelBoundViolation("kernel '" + tag_ + "' violates Lambda bounds at a probe (c=" +
                                 fmt_num(c) + ")");
    if (std::abs(c - cm) > 1e-12 * std::abs(c))
      throw KernelBoundViolation("kernel '" + tag_ + "' is not symmetric in y");
  }
}

KernelField gagliardo_kernel(int n, KernelOrder order) {
  KernelField k(n, order, 1.0, [](const Point&, const Point&) { return 1.0; }, "gagliardo", true,
                false);
  k.gagliardo_ = true;
  return k;
}

KernelField scaled_kernel(int n, KernelOrder order, double Lambda, double period) {
  return KernelField(
      n, order, Lambda,
      [Lambda, period](const Point& x, const Point&) {
        return std::pow(Lambda, std::cos(2.0 * std::numbers::pi * x(0) / period));
      },
      "scaled", false);
}

namespace {

double interp_table(const std::vector<double>& xs, const std::vector<double>& vs, double x) {
  if (x <= xs.front()) return vs.front();
  if (x >= xs.back()) return vs.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return (1 - w) * vs[i] + w * vs[i + 1];
}

void check_table(const std::vector<double>& xs, const std::vector<double>& vs) {
  if (xs.size() < 2 || xs.size() != vs.size()) throw InvalidArgument("table: need >= 2 matching points");
  if (!std::is_sorted(xs.begin(), xs.end())) throw InvalidArgument("table: abscissae must be sorted");
}

}  // namespace

KernelField table_kernel(int n, KernelOrder order, double Lambda, std::vector<double> radii,
                         std::vector<double> values) {
  check_table(radii, values);
  return KernelField(
      n, order, Lambda,
      [radii, values](const Point&, const Point& y) { return interp_table(radii, values, y.norm()); },
      "custom-table", true);
}

CoefficientField::CoefficientField() = default;

CoefficientField::CoefficientField(double M, Fn a, std::string tag, bool symmetric,
                                   bool translation_invariant, bool probe)
    : M_(M),
      a_(std::make_shared<const Fn>(std::move(a))),
      tag_(std::move(tag)),
      is_zero_(false),
      symmetric_(symmetric),
      translation_invariant_(translation_invariant) {
  if (!(M >= 0.0)) throw InvalidArgument("coefficient: M must be >= 0");
  if (probe) {
    probe_bounds(1);
    probe_bounds(2);
  }
}

CoefficientField CoefficientField::zero() { return CoefficientField(); }

CoefficientField CoefficientField::constant(double value) {
  if (value == 0.0) return zero();
  return CoefficientField(value, [value](const Point&, const Point&) { return value; }, "constant",
                          true, true);
}

CoefficientField CoefficientField::halfspace(Point normal, double offset, double value) {
  return CoefficientField(
      value,
      [normal, offset, value](const Point& x, const Point&) {
        double d = 0.0;
        for (Eigen::Index i = 0; i < std::min(normal.size(), x.size()); ++i) d += normal(i) * x(i);
        return d > offset ? value : 0.0;
      },
      "indicator-of-halfspace", true, false);
}

CoefficientField CoefficientField::checkerboard(int, double cell, double low, double high) {
  auto cb = [cell, low, high](const Point& z) {
    long k = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) k += static_cast<long>(std::floor(z(i) / cell));
    return (k % 2 == 0) ? high : low;
  };
  CoefficientField c(
      std::max(low, high),
      [cb](const Point& x, const Point& y) { return 0.5 * (cb(x) + cb(Point(x + y))); },
      "checkerboard", false, false);
  return c.with_ray_breaks([cell](const Point& x, const Point& dir, double rmax, std::vector<double>& out) {
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      double c = dir(d);
      if (std::abs(c) < 1e-12) continue;
      double s = x(d) / cell;
      long k = c > 0 ? static_cast<long>(std::floor(s)) + 1 : static_cast<long>(std::ceil(s)) - 1;
      for (int it = 0; it < 256; ++it, k += (c > 0 ? 1 : -1)) {
        double r = (k * cell - x(d)) / c;
        if (r > rmax) break;
        if (r > 0) out.push_back(r);
      }
    }
  });
}

CoefficientField CoefficientField::with_ray_breaks(RayBreaks b) const {
  CoefficientField c = *this;
  c.breaks_ = std::make_shared<const RayBreaks>(std::move(b));
  return c;
}

CoefficientField CoefficientField::table(std::vector<double> xs, std::vector<double> values) {
  check_table(xs, values);
  double M = *std::max_element(values.begin(), values.end());
  return CoefficientField(
      M, [xs, values](const Point& x, const Point&) { return interp_table(xs, values, x(0)); },
      "custom-table", true, false);
}

CoefficientField CoefficientField::holder(double alpha, double M) {
  return CoefficientField(
      M, [alpha, M](const Point& x, const Point& y) { return std::min(std::pow((x - y).norm(), alpha), M); },
      "holder", false, false);
}

CoefficientField CoefficientField::transformed(double factor, double mu, const Point& x0) const {
  if (is_zero_) return *this;
  if (factor == 1.0 && mu == 1.0 && x0.isZero()) return *this;
  CoefficientField c = *this;
  auto a = a_;
  Point z = x0;
  c.a_ = std::make_shared<const Fn>(
      [a, factor, mu, z](const Point& x, const Point& y) { return factor * (*a)(mu * x + z, mu * y); });
  c.M_ = factor * M_;
  if (breaks_) {
    auto b = breaks_;
    c.breaks_ = std::make_shared<const RayBreaks>(
        [b, mu, z](const Point& x, const Point& dir, double rmax, std::vector<double>& out) {
          std::vector<double> tmp;
          (*b)(mu * x + z, dir, mu * rmax, tmp);
          for (double r : tmp) out.push_back(r / mu);
        });
  }
  c.tag_ = tag_ + "|scaled";
  c.translation_invariant_ = translation_invariant_;
  return c;
}

void CoefficientField::probe_bounds(int n, unsigned long long seed) const {
  if (is_zero_) return;
  auto rng = rng_stream(seed, 2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Point x(n), y(n);
    for (int d = 0; d < n; ++d) {
      x(d) = 2.0 * U(rng);
      y(d) = 4.0 * U(rng);
    }
    double v = (*a_)(x, y);
    if (!(v >= 0.0 && v <= M_ * (1 + 1e-12)))
      throw KernelBoundViolation("coefficient '" + tag_ + "' leaves [0, M] at a probe (a=" + fmt_num(v) + ")");
  }
}

SourceTerm SourceTerm::constant(double c) {
  return {[c](const Point&) { return c; }, std::abs(c), "constant"};
}

SourceTerm SourceTerm::cosine(double amplitude, double frequency) {
  return {[amplitude, frequency](const Point& x) { return amplitude * std::cos(frequency * x(0)); },
          std::abs(amplitude), "cosine"};
}

SourceTerm SourceTerm::step(double left, double right) {
  return {[left, right](const Point& x) { return x(0) < 0.0 ? left : right; },
          std::max(std::abs(left), std::abs(right)), "step"};
}

SourceTerm SourceTerm::scaled(double factor) const {
  auto g = f;
  return {[g, factor](const Point& x) { return factor * g(x); }, std::abs(factor) * sup, tag};
}

double ProblemParams::Lambda() const { return std::max(Ksp.Lambda(), Ktq.Lambda()); }

ProblemParams ProblemParams::model(const Exponents& e, CoefficientField a, double c_hat, SourceTerm f) {
  ProblemParams P;
  P.exponents = e;
  P.Ksp = gagliardo_kernel(e.n, {e.s, e.p});
  P.Ktq = gagliardo_kernel(e.n, {e.t, e.q});
  P.a = std::move(a);
  P.c_hat = c_hat;
  P.f = std::move(f);
  return P;
}

ProblemParams ProblemParams::with_exponents(double p, double q) const {
  ProblemParams P = *this;
  P.exponents.p = p;
  P.exponents.q = q;
  P.Ksp = Ksp.with_order({exponents.s, p});
  P.Ktq = Ktq.with_order({exponents.t, q});
  return P;
}

void ProblemParams::validate() const {
  auto r = validate_exponents(exponents, homogeneous);
  if (!r.ok) {
    std::string msg = "invalid exponents:";
    for (auto& v : r.violations) msg += " [" + v + "]";
    throw InvalidArgument(msg);
  }
  if (!(c_hat > 0.0)) throw InvalidArgument("c_hat must be > 0");
  if (Ksp.dim() != exponents.n || Ktq.dim() != exponents.n)
    throw InvalidArgument("kernel dimension does not match n");
}

}  // namespace nldp
