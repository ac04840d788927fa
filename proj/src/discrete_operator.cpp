#include "nldp/discrete_operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nldp/operator.hpp"
#include "nldp/power.hpp"
#include "nldp/quadrature.hpp"
#include "nldp/rays.hpp"

namespace nldp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Nodes and weights of a Gauss rule mapped to [a, b].
template <class Fn>
void gauss_on(int G, double a, double b, Fn&& fn) {
  const auto& R = quad::gauss_legendre(G);
  double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  for (int k = 0; k < G; ++k) fn(c + hw * R.x[k], hw * R.w[k]);
}

// Tail rule over (A, inf) for decay r^{-1-e}: r = A w^{-1/e}.
template <class Fn>
void tail_on(double A, double e, Fn&& fn) {
  static const quad::Rule rule = quad::tanh_sinh_rule(4, 1e-14);
  for (std::size_t k = 0; k < rule.x.size(); ++k) {
    double w = rule.x[k];
    double r = A * std::pow(w, -1.0 / e);
    if (!std::isfinite(r)) continue;
    double jac = A / e * std::pow(w, -1.0 / e - 1.0);
    fn(r, rule.w[k] * jac);
  }
}

inline double box_exit_dist(const Point& x, const Point& om, const Point& lo, const Point& hi) {
  return box_exit(x, om, lo, hi);
}

}  // namespace

DiscreteOperator::DiscreteOperator(const ProblemParams& P, int n, double R, int N, Exterior ext, Interp interp,
                                   DiscreteSpec spec)
    : P_(P), n_(n), N_(N), R_(R), ext_(std::move(ext)), interp_(interp), spec_(spec) {
  P_.validate();
  if (n != P.exponents.n) throw InvalidArgument("discrete operator: dimension does not match n");
  if (n != 1 && n != 2) throw InvalidArgument("discrete operator: n must be 1 or 2");
  if (N < 2 * spec.near_cells + 3) throw InvalidArgument("discrete operator: grid too coarse for the near square");
  if (!(R > 0)) throw InvalidArgument("discrete operator: R must be positive");
  if (spec_.gauss <= 0) spec_.gauss = n == 1 ? 4 : 3;
  h_ = 2.0 * R / (N - 1);
  R_far_ = spec.R_far > 0 ? spec.R_far : std::max(8.0 * R, 64.0);
  lo_ = Point::Constant(n, -R);
  hi_ = Point::Constant(n, R);
  qa_ = P_.q_phase();
  check_operator_preconditions(grid(initial()), P_);

  Eigen::Index total = n == 1 ? N : static_cast<Eigen::Index>(N) * N;
  for (Eigen::Index k = 0; k < total; ++k) {
    int i = static_cast<int>(k % N), j = n == 2 ? static_cast<int>(k / N) : 1;
    if (i > 0 && i < N - 1 && j > 0 && (n == 1 || j < N - 1)) interior_.push_back(k);
  }
  build_far();
  near_.resize(interior_.size());
  ext_w_.resize(interior_.size());
  const Eigen::Index rows = static_cast<Eigen::Index>(interior_.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index r = 0; r < rows; ++r) {
    Point x = node_at(interior_[r]);
    build_near(r, x);
    build_ext(r, x);
  }
}

Point DiscreteOperator::node_at(Eigen::Index k) const {
  double x = -R_ + h_ * static_cast<double>(k % N_);
  return n_ == 1 ? point(x) : point(x, -R_ + h_ * static_cast<double>(k / N_));
}

GridFunction DiscreteOperator::grid(const Eigen::VectorXd& values) const {
  return GridFunction(n_, lo_, h_, N_, values, ext_, interp_);
}

Eigen::VectorXd DiscreteOperator::initial() const {
  Eigen::Index total = n_ == 1 ? N_ : static_cast<Eigen::Index>(N_) * N_;
  Eigen::VectorXd v(total);
  for (Eigen::Index k = 0; k < total; ++k) {
    Point x = node_at(k);
    v(k) = ext_(x);
  }
  return v;
}

void DiscreteOperator::build_far() {
  const int G = spec_.gauss, C = N_ - 1;
  GridFunction shape = grid(initial());
  const auto& rule = quad::gauss_legendre(G);
  for (int cj = 0; cj < (n_ == 2 ? C : 1); ++cj)
    for (int ci = 0; ci < C; ++ci)
      for (int b = 0; b < (n_ == 2 ? G : 1); ++b)
        for (int a = 0; a < G; ++a) {
          Point z = lo_;
          z(0) += h_ * (ci + 0.5 * (rule.x[a] + 1.0));
          double w = 0.5 * h_ * rule.w[a];
          if (n_ == 2) {
            z(1) += h_ * (cj + 0.5 * (rule.x[b] + 1.0));
            w *= 0.5 * h_ * rule.w[b];
          }
          far_pts_.push_back(z);
          far_w_.push_back(w);
          far_cell_.push_back(ci + C * cj);
          far_stencil_.push_back(shape.stencil(z));
        }
  const Eigen::Index rows = static_cast<Eigen::Index>(interior_.size()), cols = static_cast<Eigen::Index>(far_pts_.size());
  Wp_.setZero(rows, cols);
  if (qa_) Wq_.setZero(rows, cols);
  const int m = spec_.near_cells;
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index k = interior_[r];
    int ii = static_cast<int>(k % N_), jj = n_ == 2 ? static_cast<int>(k / N_) : 0;
    Point x = node_at(k);
    for (Eigen::Index c = 0; c < cols; ++c) {
      int ci = far_cell_[c] % C, cj = far_cell_[c] / C;
      bool in_x = ci >= ii - m && ci <= ii + m - 1;
      bool in_y = n_ == 1 || (cj >= jj - m && cj <= jj + m - 1);
      if (in_x && in_y) continue;
      Point y = far_pts_[c] - x;
      Wp_(r, c) = far_w_[c] * P_.Ksp(x, y);
      if (qa_) Wq_(r, c) = far_w_[c] * P_.c_hat * P_.a(x, y) * P_.Ktq(x, y);
    }
  }
}

void DiscreteOperator::build_near(Eigen::Index row, const Point& x) {
  auto& out = near_[row];
  const int m = spec_.near_cells;
  const int Gr = n_ == 1 ? 8 : 6;
  static const quad::Rule first = quad::tanh_sinh_rule(3, 1e-60);
  auto add = [&](const Point& y, double w, bool is_first) {
    Near s;
    s.y = y;
    s.kp = w * P_.Ksp(x, y);
    s.kq = qa_ ? w * P_.c_hat * P_.Ktq(x, y) : 0.0;
    s.ap = qa_ ? P_.a(x, y) : 0.0;
    s.am = qa_ ? P_.a(x, Point(-y)) : 0.0;
    s.first = is_first;
    out.push_back(s);
  };
  auto ray = [&](const Point& om, double wang) {
    double r1 = h_ / om.cwiseAbs().maxCoeff();
    for (std::size_t k = 0; k < first.x.size(); ++k) {
      double r = r1 * first.x[k];
      double jac = n_ == 2 ? r : 1.0;
      add(Point(r * om), wang * r1 * first.w[k] * jac, true);
    }
    std::vector<double> br;
    for (int k = 1; k <= m; ++k) br.push_back(k * r1);
    for (double sgn : {1.0, -1.0}) {
      Point d = sgn * om;
      double e = box_exit_dist(x, d, lo_, hi_);
      if (e > r1 && e < m * r1) br.push_back(e);
    }
    std::sort(br.begin(), br.end());
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      if (!(br[k + 1] > br[k] * (1 + 1e-12))) continue;
      gauss_on(Gr, br[k], br[k + 1], [&](double r, double w) {
        double jac = n_ == 2 ? r : 1.0;
        add(Point(r * om), wang * w * jac, false);
      });
    }
  };
  if (n_ == 1) {
    ray(point(1.0), 1.0);
    return;
  }
  for (int sec = 0; sec < 4; ++sec)
    gauss_on(spec_.angles, sec * kPi / 4, (sec + 1) * kPi / 4,
             [&](double th, double w) { ray(point(std::cos(th), std::sin(th)), w); });
}

void DiscreteOperator::build_ext(Eigen::Index row, const Point& x) {
  const int m = spec_.near_cells;
  const auto& e = P_.exponents;
  std::map<double, std::pair<double, double>> acc;
  auto add = [&](const Point& y, double wp, double wq) {
    Point z = x + y;
    double g = ext_(z);
    auto& s = acc[g];
    if (wp != 0.0) s.first += wp * P_.Ksp(x, y);
    if (wq != 0.0 && qa_) s.second += wq * P_.c_hat * P_.a(x, y) * P_.Ktq(x, y);
  };
  auto ray = [&](const Point& om, double wang) {
    double rS = m * h_ / om.cwiseAbs().maxCoeff();
    double r0 = std::max(box_exit_dist(x, om, lo_, hi_), rS);
    auto jac = [&](double r) { return n_ == 2 ? r : 1.0; };
    for (double b = r0; b < R_far_;) {
      double c = std::min(2.0 * b, R_far_);
      gauss_on(8, b, c, [&](double r, double w) {
        double ww = wang * w * jac(r);
        add(Point(r * om), ww, ww);
      });
      b = c;
    }
    double A = std::max(R_far_, r0);
    tail_on(A, e.s * e.p, [&](double r, double w) { add(Point(r * om), wang * w * jac(r), 0.0); });
    if (qa_) tail_on(A, e.t * e.q, [&](double r, double w) { add(Point(r * om), 0.0, wang * w * jac(r)); });
  };
  if (n_ == 1) {
    ray(point(1.0), 1.0);
    ray(point(-1.0), 1.0);
  } else {
    std::vector<double> br;
    for (int k = 0; k <= 8; ++k) br.push_back(k * kPi / 4);
    for (int c = 0; c < 4; ++c) {
      double cx = (c & 1) ? hi_(0) : lo_(0), cy = (c & 2) ? hi_(1) : lo_(1);
      double a = std::atan2(cy - x(1), cx - x(0));
      if (a < 0) a += 2 * kPi;
      br.push_back(a);
    }
    std::sort(br.begin(), br.end());
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      if (!(br[k + 1] - br[k] > 1e-12)) continue;
      gauss_on(spec_.angles, br[k], br[k + 1],
               [&](double th, double w) { ray(point(std::cos(th), std::sin(th)), w); });
    }
  }
  auto& out = ext_w_[row];
  for (const auto& [g, w] : acc) out.push_back({w.first, w.second, g});
}

Eigen::VectorXd DiscreteOperator::apply(const GridFunction& u) const {
  const auto& e = P_.exponents;
  const double p = e.p, q = e.q;
  const Eigen::Index cols = static_cast<Eigen::Index>(far_pts_.size());
  Eigen::VectorXd S(cols);
  for (Eigen::Index c = 0; c < cols; ++c) S(c) = u.apply(far_stencil_[c]);
  const Eigen::Index rows = static_cast<Eigen::Index>(interior_.size());
  Eigen::VectorXd out(rows);
  Eigen::VectorXd WS, WqS;
  if (p == 2.0) WS = Wp_ * S;
  if (qa_ && q == 2.0) WqS = Wq_ * S;
  const Eigen::VectorXd& vals = u.values();
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index k = interior_[r];
    const double u0 = vals(k);
    Point x = node_at(k);
    double acc = 0.0;
    if (p == 2.0) {
      acc += u0 * Wp_.row(r).sum() - WS(r);
    } else {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double w = Wp_(r, c);
        if (w != 0.0) acc += w * power_map(u0 - S(c), p);
      }
    }
    if (qa_) {
      if (q == 2.0) {
        acc += u0 * Wq_.row(r).sum() - WqS(r);
      } else {
        for (Eigen::Index c = 0; c < cols; ++c) {
          double w = Wq_(r, c);
          if (w != 0.0) acc += w * power_map(u0 - S(c), q);
        }
      }
    }
    for (const auto& s : near_[r]) {
      double lin, ep, lm, em;
      if (s.first && u.split(x, s.y, lin, ep) && u.split(x, Point(-s.y), lm, em)) {
        acc += s.kp * pair_phi(lin, ep, em, p);
        if (qa_) {
          double t = s.am * pair_phi(lin, ep, em, q);
          if (s.ap != s.am) t += (s.ap - s.am) * power_map(-(lin + ep), q);
          acc += s.kq * t;
        }
        continue;
      }
      double dp = u0 - u(x + s.y), dm = u0 - u(x - s.y);
      acc += s.kp * (power_map(dp, p) + power_map(dm, p));
      if (qa_) acc += s.kq * (s.ap * power_map(dp, q) + s.am * power_map(dm, q));
    }
    for (const auto& s : ext_w_[r]) {
      double d = u0 - s.g;
      acc += s.wp * power_map(d, p);
      if (qa_) acc += s.wq * power_map(d, q);
    }
    out(r) = acc;
  }
  return out;
}

Eigen::MatrixXd DiscreteOperator::jacobian(const GridFunction* u) const {
  const Eigen::Index rows = static_cast<Eigen::Index>(interior_.size());
  const Eigen::Index total = n_ == 1 ? N_ : static_cast<Eigen::Index>(N_) * N_;
  std::vector<Eigen::Index> col(total, -1);
  for (Eigen::Index r = 0; r < rows; ++r) col[interior_[r]] = r;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, rows);
  const double p = P_.exponents.p, q = P_.exponents.q;
  const bool lin = u == nullptr;
  // derivative of phi_r at d
  auto dphi = [](double d, double r) { return r == 2.0 ? 1.0 : (r - 1.0) * std::pow(std::max(std::abs(d), 1e-6), r - 2.0); };
  Eigen::VectorXd S;
  if (!lin) {
    S.resize(static_cast<Eigen::Index>(far_pts_.size()));
    for (Eigen::Index c = 0; c < S.size(); ++c) S(c) = u->apply(far_stencil_[c]);
  }
  const int C = N_ - 1;
  // multilinear weights of a point on the node lattice, added to row r with factor f
  auto spread = [&](Eigen::Index r, const Point& z, double f) {
    double s[2] = {0, 0};
    int c[2] = {0, 0};
    for (int d = 0; d < n_; ++d) {
      double t = (z(d) - lo_(d)) / h_;
      if (t < 0 || t > C) return;
      c[d] = std::clamp(static_cast<int>(std::floor(t)), 0, C - 1);
      s[d] = t - c[d];
    }
    for (int b = 0; b < (n_ == 2 ? 2 : 1); ++b)
      for (int a = 0; a < 2; ++a) {
        double w = (a ? s[0] : 1 - s[0]) * (n_ == 2 ? (b ? s[1] : 1 - s[1]) : 1.0);
        if (w == 0.0) continue;
        Eigen::Index k = (c[0] + a) + static_cast<Eigen::Index>(N_) * (c[1] + b);
        if (col[k] >= 0) A(r, col[k]) += f * w;
      }
  };
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index k = interior_[r];
    const int i = static_cast<int>(k % N_), j = n_ == 2 ? static_cast<int>(k / N_) : 0;
    Point x = node_at(k);
    const double u0 = lin ? 0.0 : u->values()(k);
    double diag = 0.0;
    for (Eigen::Index c = 0; c < Wp_.cols(); ++c) {
      double w = Wp_(r, c);
      if (!lin) {
        double d = u0 - S(c);
        w *= dphi(d, p);
        if (qa_) w += Wq_(r, c) * dphi(d, q);
      }
      if (w == 0.0) continue;
      diag += w;
      spread(r, far_pts_[c], -w);
    }
    double m11 = 0, m12 = 0, m22 = 0;
    for (const auto& s : near_[r]) {
      double wp = s.kp, wm = s.kp;
      if (!lin) {
        double dp = u0 - (*u)(x + s.y), dm = u0 - (*u)(x - s.y);
        wp = s.kp * dphi(dp, p) + (qa_ ? s.kq * s.ap * dphi(dp, q) : 0.0);
        wm = s.kp * dphi(dm, p) + (qa_ ? s.kq * s.am * dphi(dm, q) : 0.0);
      }
      if (s.first) {
        double w = 0.5 * (wp + wm);
        m11 += w * s.y(0) * s.y(0);
        if (n_ == 2) {
          m12 += 2 * w * s.y(0) * s.y(1);
          m22 += w * s.y(1) * s.y(1);
        }
        continue;
      }
      diag += wp + wm;
      spread(r, x + s.y, -wp);
      spread(r, x - s.y, -wm);
    }
    for (const auto& s : ext_w_[r]) {
      if (lin) {
        diag += s.wp;
      } else {
        double d = u0 - s.g;
        diag += s.wp * dphi(d, p) + (qa_ ? s.wq * dphi(d, q) : 0.0);
      }
    }
    A(r, r) += diag;
    // -(y^T H y) with central-difference Hessian entries
    const double h2 = h_ * h_;
    auto add = [&](int di, int dj, double f) {
      Eigen::Index kk = (i + di) + static_cast<Eigen::Index>(N_) * (j + dj);
      if (col[kk] >= 0) A(r, col[kk]) += f;
    };
    add(0, 0, 2 * m11 / h2);
    add(1, 0, -m11 / h2);
    add(-1, 0, -m11 / h2);
    if (n_ == 2) {
      add(0, 0, 2 * m22 / h2);
      add(0, 1, -m22 / h2);
      add(0, -1, -m22 / h2);
      double f = -m12 / (4 * h2);
      add(1, 1, f);
      add(-1, -1, f);
      add(1, -1, -f);
      add(-1, 1, -f);
    }
  }
  return A;
}

}  // namespace nldp
