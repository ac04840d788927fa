#pragma once

#include <functional>
#include <limits>
#include <string>

#include "nldp/types.hpp"

namespace nldp {

enum class Interp { cubic, linear };

// Closed-form extension of a grid function outside its box.
struct Exterior {
  std::function<double(const Point&)> g = [](const Point&) { return 0.0; };
  double growth = 0.0;  // |g(x)| = O(|x|^growth)
  double sup = 0.0;     // declared sup over R^n (inf when unbounded above)
  double inf = 0.0;     // declared inf over R^n (-inf when unbounded below)
  bool is_constant = true;
  std::string tag = "constant:0";

  double operator()(const Point& x) const { return g(x); }

  static Exterior constant(double c);
  // 2|2x|^eta - 1, optionally capped from above
  static Exterior envelope(double eta, double cap = std::numeric_limits<double>::infinity());
  // left for x_1 < 0, right otherwise
  static Exterior step(double left, double right);
  // slope * x_1
  static Exterior linear(double slope);
  static Exterior function(std::function<double(const Point&)> g, double growth, double sup, double inf,
                           std::string tag);

  // x -> lambda (g(mu x + x0) - m)
  Exterior transformed(double lambda, double mu, const Point& x0, double m) const;
};

// Values on a uniform grid over lo + [0, (N-1) h]^n, interpolated by a tensor not-a-knot cubic
// spline (or multilinear), and extended outside by an Exterior.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int n, Point lo, double h, int N, Eigen::VectorXd values, Exterior ext,
               Interp interp = Interp::cubic);

  // Box [-R, R]^n with N nodes per axis, values sampled from u.
  static GridFunction sample(int n, double R, int N, const std::function<double(const Point&)>& u,
                             Exterior ext, Interp interp = Interp::cubic);
  // Box [-R, R]^n with node values taken from the exterior formula itself.
  static GridFunction from_exterior(int n, double R, int N, Exterior ext, Interp interp = Interp::cubic);

  double operator()(const Point& x) const;
  double interpolate(const Point& x) const;
  bool inside(const Point& x) const;
  double boundary_distance(const Point& x) const;

  int dim() const { return n_; }
  int nodes_per_axis() const { return N_; }
  Eigen::Index size() const { return values_.size(); }
  double h() const { return h_; }
  const Point& lo() const { return lo_; }
  Point hi() const { return lo_.array() + h_ * (N_ - 1); }
  double half_width() const { return 0.5 * h_ * (N_ - 1); }
  Point center() const { return lo_.array() + 0.5 * h_ * (N_ - 1); }
  Interp interp() const { return interp_; }
  const Exterior& exterior() const { return ext_; }

  Point node(Eigen::Index k) const;
  Eigen::Index index(int i, int j = 0) const { return i + static_cast<Eigen::Index>(N_) * j; }
  bool on_boundary(Eigen::Index k) const;

  const Eigen::VectorXd& values() const { return values_; }
  void set_values(Eigen::VectorXd v);
  // Second-derivative moments: 1D {Mxx}, 2D {Mxx, Myy, Mxxyy}.
  const Eigen::VectorXd& moment(int k) const { return moments_[k]; }

  // Basis weights of the spline at x: value = sum over the 2^n corners of
  // A*f + C*Mx (+ D*My + CD*Mxy in 2D). Used by fixed-stencil consumers.
  struct Stencil {
    Eigen::Index base = 0;
    double ax[2], cx[2], ay[2] = {1, 0}, cy[2] = {0, 0};
  };
  Stencil stencil(const Point& x) const;
  double apply(const Stencil& s) const;

  // u(x + y) - u(x) = lin + rest with lin the gradient term of the cell holding x and rest the
  // higher-order terms of the cell holding x + y/2, both free of cancellation. False when x or
  // x + y leaves the box.
  bool split(const Point& x, const Point& y, double& lin, double& rest) const;

  // x -> lambda (u(mu x + x0) - m), exact re-indexing of the grid.
  GridFunction transformed(double lambda, double mu, const Point& x0, double m) const;

  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }

 private:
  void build();

  int n_ = 1;
  int N_ = 0;
  double h_ = 1.0;
  Point lo_;
  Eigen::VectorXd values_;
  Exterior ext_;
  Interp interp_ = Interp::cubic;
  Eigen::VectorXd moments_[3];
};

// Not-a-knot second derivatives of uniformly spaced samples (stride allows strided access).
void spline_moments(const double* f, Eigen::Index stride, int N, double h, double* M,
                    Eigen::Index mstride);

}  // namespace nldp
