#include "nldp/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace nldp {

Exterior Exterior::constant(double c) {
  Exterior e;
  e.g = [c](const Point&) { return c; };
  e.sup = e.inf = c;
  e.is_constant = true;
  std::ostringstream os;
  os.precision(17);
  os << "constant:" << c;
  e.tag = os.str();
  return e;
}

Exterior Exterior::envelope(double eta, double cap) {
  Exterior e;
  e.g = [eta, cap](const Point& x) { return std::min(cap, 2.0 * std::pow(2.0 * x.norm(), eta) - 1.0); };
  e.growth = std::isfinite(cap) ? 0.0 : eta;
  e.sup = cap;
  e.inf = -1.0;
  e.is_constant = false;
  std::ostringstream os;
  os.precision(17);
  os << "envelope:" << eta;
  if (std::isfinite(cap)) os << ":cap=" << cap;
  e.tag = os.str();
  return e;
}

Exterior Exterior::step(double left, double right) {
  Exterior e;
  e.g = [left, right](const Point& x) { return x(0) < 0.0 ? left : right; };
  e.sup = std::max(left, right);
  e.inf = std::min(left, right);
  e.is_constant = left == right;
  std::ostringstream os;
  os.precision(17);
  os << "step:" << left << ":" << right;
  e.tag = os.str();
  return e;
}

Exterior Exterior::linear(double slope) {
  Exterior e;
  e.g = [slope](const Point& x) { return slope * x(0); };
  e.growth = slope == 0.0 ? 0.0 : 1.0;
  e.sup = slope == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  e.inf = -e.sup;
  e.is_constant = slope == 0.0;
  std::ostringstream os;
  os.precision(17);
  os << "linear:" << slope;
  e.tag = os.str();
  return e;
}

Exterior Exterior::function(std::function<double(const Point&)> g, double growth, double sup, double inf,
                            std::string tag) {
  Exterior e;
  e.g = std::move(g);
  e.growth = growth;
  e.sup = sup;
  e.inf = inf;
  e.is_constant = false;
  e.tag = std::move(tag);
  return e;
}

Exterior Exterior::transformed(double lambda, double mu, const Point& x0, double m) const {
  if (lambda == 1.0 && mu == 1.0 && m == 0.0 && x0.isZero()) return *this;
  Exterior e = *this;
  auto g0 = g;
  Point z = x0;
  e.g = [g0, lambda, mu, z, m](const Point& x) { return lambda * (g0(mu * x + z) - m); };
  double a = lambda * (sup - m), b = lambda * (inf - m);
  e.sup = std::max(a, b);
  e.inf = std::min(a, b);
  e.tag = tag + "|scaled";
  return e;
}

void spline_moments(const double* f, Eigen::Index stride, int N, double h, double* M, Eigen::Index mstride) {
  auto F = [&](int i) { return f[i * stride]; };
  auto Mr = [&](int i) -> double& { return M[i * mstride]; };
  if (N < 3) {
    for (int i = 0; i < N; ++i) Mr(i) = 0.0;
    return;
  }
  const double c = 6.0 / (h * h);
  auto rhs = [&](int i) { return c * (F(i - 1) - 2.0 * F(i) + F(i + 1)); };
  if (N == 3) {
    double m = rhs(1) / 6.0;
    Mr(0) = Mr(1) = Mr(2) = m;
    return;
  }
  Mr(1) = rhs(1) / 6.0;
  Mr(N - 2) = rhs(N - 2) / 6.0;
  int m = N - 4;  // unknowns M_2 .. M_{N-3}
  if (m > 0) {
    std::vector<double> cp(m), dp(m);
    for (int k = 0; k < m; ++k) {
      int i = k + 2;
      double d = rhs(i);
      if (k == 0) d -= Mr(1);
      if (k == m - 1) d -= Mr(N - 2);
      double denom = 4.0 - (k > 0 ? cp[k - 1] : 0.0);
      cp[k] = 1.0 / denom;
      dp[k] = (d - (k > 0 ? dp[k - 1] : 0.0)) / denom;
    }
    for (int k = m - 1; k >= 0; --k) {
      double v = dp[k] - (k < m - 1 ? cp[k] * Mr(k + 3) : 0.0);
      Mr(k + 2) = v;
    }
  }
  Mr(0) = 2.0 * Mr(1) - Mr(2);
  Mr(N - 1) = 2.0 * Mr(N - 2) - Mr(N - 3);
}

GridFunction::GridFunction(int n, Point lo, double h, int N, Eigen::VectorXd values, Exterior ext, Interp interp)
    : n_(n), N_(N), h_(h), lo_(std::move(lo)), values_(std::move(values)), ext_(std::move(ext)), interp_(interp) {
  if (n != 1 && n != 2) throw InvalidArgument("grid: n must be 1 or 2");
  if (N < 4) throw InvalidArgument("grid: need at least 4 nodes per axis");
  if (!(h > 0)) throw InvalidArgument("grid: h must be positive");
  Eigen::Index expect = n == 1 ? N : static_cast<Eigen::Index>(N) * N;
  if (values_.size() != expect) throw InvalidArgument("grid: value count does not match N^n");
  if (!values_.allFinite()) throw InvalidArgument("grid: non-finite values");
  build();
}

GridFunction GridFunction::sample(int n, double R, int N, const std::function<double(const Point&)>& u,
                                  Exterior ext, Interp interp) {
  double h = 2.0 * R / (N - 1);
  Point lo = Point::Constant(n, -R);
  Eigen::Index total = n == 1 ? N : static_cast<Eigen::Index>(N) * N;
  Eigen::VectorXd v(total);
  for (Eigen::Index k = 0; k < total; ++k) {
    Point x(n);
    x(0) = -R + h * static_cast<double>(k % N);
    if (n == 2) x(1) = -R + h * static_cast<double>(k / N);
    v(k) = u(x);
  }
  return GridFunction(n, lo, h, N, std::move(v), std::move(ext), interp);
}

GridFunction GridFunction::from_exterior(int n, double R, int N, Exterior ext, Interp interp) {
  auto g = ext.g;
  return sample(n, R, N, g, std::move(ext), interp);
}

void GridFunction::build() {
  for (auto& m : moments_) m.resize(0);
  if (interp_ == Interp::linear) return;
  if (n_ == 1) {
    moments_[0].resize(N_);
    spline_moments(values_.data(), 1, N_, h_, moments_[0].data(), 1);
    return;
  }
  const Eigen::Index NN = static_cast<Eigen::Index>(N_) * N_;
  for (int k = 0; k < 3; ++k) moments_[k].resize(NN);
  for (int j = 0; j < N_; ++j)
    spline_moments(values_.data() + index(0, j), 1, N_, h_, moments_[0].data() + index(0, j), 1);
  for (int i = 0; i < N_; ++i) {
    spline_moments(values_.data() + i, N_, N_, h_, moments_[1].data() + i, N_);
    spline_moments(moments_[0].data() + i, N_, N_, h_, moments_[2].data() + i, N_);
  }
}

void GridFunction::set_values(Eigen::VectorXd v) {
  if (v.size() != values_.size()) throw InvalidArgument("grid: size mismatch in set_values");
  values_ = std::move(v);
  build();
}

Point GridFunction::node(Eigen::Index k) const {
  Point x(n_);
  x(0) = lo_(0) + h_ * static_cast<double>(k % N_);
  if (n_ == 2) x(1) = lo_(1) + h_ * static_cast<double>(k / N_);
  return x;
}

bool GridFunction::on_boundary(Eigen::Index k) const {
  int i = static_cast<int>(k % N_);
  if (i == 0 || i == N_ - 1) return true;
  if (n_ == 2) {
    int j = static_cast<int>(k / N_);
    if (j == 0 || j == N_ - 1) return true;
  }
  return false;
}

bool GridFunction::inside(const Point& x) const {
  const double L = h_ * (N_ - 1);
  for (int d = 0; d < n_; ++d) {
    double z = x(d) - lo_(d);
    if (!(z >= 0.0 && z <= L)) return false;
  }
  return true;
}

double GridFunction::boundary_distance(const Point& x) const {
  const double L = h_ * (N_ - 1);
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_; ++k) {
    double z = x(k) - lo_(k);
    d = std::min({d, z, L - z});
  }
  return d;
}

namespace {

inline void axis_weights(double z, double h, int N, bool cubic, Eigen::Index& i, double a[2], double c[2]) {
  double s = z / h;
  long k = static_cast<long>(std::floor(s));
  if (k < 0) k = 0;
  if (k > N - 2) k = N - 2;
  double t = s - static_cast<double>(k);
  i = k;
  a[0] = 1.0 - t;
  a[1] = t;
  if (cubic) {
    double u = 1.0 - t, f = h * h / 6.0;
    c[0] = f * (u * u * u - u);
    c[1] = f * (t * t * t - t);
  } else {
    c[0] = c[1] = 0.0;
  }
}

}  // namespace

GridFunction::Stencil GridFunction::stencil(const Point& x) const {
  Stencil s;
  const bool cubic = interp_ == Interp::cubic;
  Eigen::Index i = 0, j = 0;
  axis_weights(x(0) - lo_(0), h_, N_, cubic, i, s.ax, s.cx);
  if (n_ == 2) axis_weights(x(1) - lo_(1), h_, N_, cubic, j, s.ay, s.cy);
  s.base = index(static_cast<int>(i), static_cast<int>(j));
  return s;
}

double GridFunction::apply(const Stencil& s) const {
  const double* f = values_.data();
  if (n_ == 1) {
    double v = s.ax[0] * f[s.base] + s.ax[1] * f[s.base + 1];
    if (interp_ == Interp::cubic) {
      const double* M = moments_[0].data();
      v += s.cx[0] * M[s.base] + s.cx[1] * M[s.base + 1];
    }
    return v;
  }
  double v = 0.0;
  const bool cubic = interp_ == Interp::cubic;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      Eigen::Index k = s.base + a + static_cast<Eigen::Index>(N_) * b;
      v += s.ax[a] * s.ay[b] * f[k];
      if (cubic)
        v += s.cx[a] * s.ay[b] * moments_[0][k] + s.ax[a] * s.cy[b] * moments_[1][k] +
             s.cx[a] * s.cy[b] * moments_[2][k];
    }
  }
  return v;
}

namespace {

// Basis polynomial of one axis: value, first-order coefficient (times tau) and higher-order
// remainder for a step tau, all in cell units.
struct Basis {
  double v[4], d[4], r[4];  // A0, A1, C0, C1
};

inline void basis_at(double t, double tau, double h, bool cubic, Basis& b) {
  const double f = h * h / 6.0;
  b.v[0] = 1.0 - t;
  b.d[0] = -tau;
  b.r[0] = 0.0;
  b.v[1] = t;
  b.d[1] = tau;
  b.r[1] = 0.0;
  if (!cubic) {
    for (int k = 2; k < 4; ++k) b.v[k] = b.d[k] = b.r[k] = 0.0;
    return;
  }
  // C0 = f(-2t + 3t^2 - t^3), C1 = f(-t + t^3)
  b.v[2] = f * (-2 * t + 3 * t * t - t * t * t);
  b.d[2] = f * (-2 + 6 * t - 3 * t * t) * tau;
  b.r[2] = f * (tau * tau * (3 - 3 * t) - tau * tau * tau);
  b.v[3] = f * (-t + t * t * t);
  b.d[3] = f * (-1 + 3 * t * t) * tau;
  b.r[3] = f * (3 * t * tau * tau + tau * tau * tau);
}

inline long cell_of(double z, double h, int N) {
  long k = static_cast<long>(std::floor(z / h));
  return std::clamp<long>(k, 0, N - 2);
}

}  // namespace

bool GridFunction::split(const Point& x, const Point& y, double& lin, double& rest) const {
  Point xy = x + y;
  if (!inside(x) || !inside(xy)) return false;
  const bool cubic = interp_ == Interp::cubic;
  const double* f = values_.data();
  if (n_ == 1) {
    double zx = x(0) - lo_(0);
    long kh = cell_of(zx, h_, N_);
    long ks = cell_of(zx + 0.5 * y(0), h_, N_);
    double tau = y(0) / h_;
    Basis bh, bs;
    basis_at(zx / h_ - kh, tau, h_, cubic, bh);
    basis_at(zx / h_ - ks, tau, h_, cubic, bs);
    auto coef = [&](long k, int j) {
      switch (j) {
        case 0: return f[k];
        case 1: return f[k + 1];
        case 2: return cubic ? moments_[0][k] : 0.0;
        default: return cubic ? moments_[0][k + 1] : 0.0;
      }
    };
    lin = 0.0;
    rest = 0.0;
    for (int j = 0; j < 4; ++j) {
      lin += bh.d[j] * coef(kh, j);
      rest += bs.r[j] * coef(ks, j);
    }
    return true;
  }
  double zx = x(0) - lo_(0), zy = x(1) - lo_(1);
  long khx = cell_of(zx, h_, N_), khy = cell_of(zy, h_, N_);
  long ksx = cell_of(zx + 0.5 * y(0), h_, N_), ksy = cell_of(zy + 0.5 * y(1), h_, N_);
  double tx = y(0) / h_, ty = y(1) / h_;
  Basis hx, hy, sx, sy;
  basis_at(zx / h_ - khx, tx, h_, cubic, hx);
  basis_at(zy / h_ - khy, ty, h_, cubic, hy);
  basis_at(zx / h_ - ksx, tx, h_, cubic, sx);
  basis_at(zy / h_ - ksy, ty, h_, cubic, sy);
  // coefficient of basis pair (a in x, b in y): a, b in {0,1} linear, {2,3} cubic corrections
  auto coef = [&](long kx, long ky, int a, int b) {
    Eigen::Index k = (kx + (a & 1)) + static_cast<Eigen::Index>(N_) * (ky + (b & 1));
    bool ca = a >= 2, cb = b >= 2;
    if (!ca && !cb) return f[k];
    if (!cubic) return 0.0;
    if (ca && !cb) return moments_[0][k];
    if (!ca && cb) return moments_[1][k];
    return moments_[2][k];
  };
  lin = 0.0;
  rest = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double ch = coef(khx, khy, a, b);
      if (ch != 0.0) lin += ch * (hx.d[a] * hy.v[b] + hx.v[a] * hy.d[b]);
      double cs = coef(ksx, ksy, a, b);
      if (cs != 0.0) {
        double P = sx.v[a], dP = sx.d[a], rP = sx.r[a];
        double Q = sy.v[b], dQ = sy.d[b], rQ = sy.r[b];
        rest += cs * (P * rQ + rP * Q + dP * dQ + dP * rQ + rP * dQ + rP * rQ);
      }
    }
  return true;
}

double GridFunction::interpolate(const Point& x) const { return apply(stencil(x)); }

double GridFunction::operator()(const Point& x) const { return inside(x) ? interpolate(x) : ext_(x); }

GridFunction GridFunction::transformed(double lambda, double mu, const Point& x0, double m) const {
  if (!(lambda > 0 && mu > 0)) throw DegenerateScaling("transform: lambda and mu must be positive");
  Point lo = (lo_ - x0) / mu;
  Eigen::VectorXd v = lambda * (values_.array() - m).matrix();
  if (lambda == 1.0 && m == 0.0) v = values_;
  if (mu == 1.0 && x0.isZero()) lo = lo_;
  return GridFunction(n_, lo, h_ / mu, N_, std::move(v), ext_.transformed(lambda, mu, x0, m), interp_);
}

}  // namespace nldp
