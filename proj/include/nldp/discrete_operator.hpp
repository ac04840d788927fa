#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nldp/grid_function.hpp"
#include "nldp/params.hpp"

namespace nldp {

struct DiscreteSpec {
  int near_cells = 4;   // half-width of the paired near square, in cells
  int gauss = 0;        // far-cell Gauss points per axis (0: 4 in 1D, 3 in 2D)
  int ts_level = 3;     // tanh-sinh level on the first cell
  int angles = 8;       // Gauss points per angular sector (2D)
  double R_far = 0.0;   // 0 selects max(8R, 64)
};

// Fixed-rule discretization of the operator at the interior nodes of a box grid with frozen
// boundary nodes and exterior. Far-field samples sit at shared absolute positions, so only the
// weights depend on the node.
class DiscreteOperator {
 public:
  DiscreteOperator(const ProblemParams& P, int n, double R, int N, Exterior ext, Interp interp = Interp::cubic,
                   DiscreteSpec spec = {});

  int dim() const { return n_; }
  int nodes_per_axis() const { return N_; }
  double h() const { return h_; }
  const std::vector<Eigen::Index>& interior() const { return interior_; }
  const ProblemParams& params() const { return P_; }
  const Exterior& exterior() const { return ext_; }

  GridFunction grid(const Eigen::VectorXd& values) const;
  // Node values of the exterior formula (the frozen boundary and the cold start).
  Eigen::VectorXd initial() const;

  // Operator at the interior nodes, in the order of interior().
  Eigen::VectorXd apply(const GridFunction& u) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& values) const { return apply(grid(values)); }

  // p = 2 pure-phase operator on interior unknowns with multilinear far-field interpolation and a
  // finite-difference Hessian on the first cell; a preconditioner, not the discretization itself.
  Eigen::MatrixXd linear_matrix() const { return jacobian(nullptr); }
  // Same structure with every weight scaled by the derivative of the power maps at u (both phases),
  // differences floored at 1e-6 for exponents below 2.
  Eigen::MatrixXd jacobian(const GridFunction* u) const;

 private:
  struct Near {
    Point y;
    double kp, kq, ap, am;
    bool first;
  };
  struct Ext {
    double wp, wq, g;
  };

  Point node_at(Eigen::Index k) const;
  void build_far();
  void build_near(Eigen::Index row, const Point& x);
  void build_ext(Eigen::Index row, const Point& x);

  ProblemParams P_;
  int n_, N_;
  double h_, R_, R_far_;
  Exterior ext_;
  Interp interp_;
  DiscreteSpec spec_;
  Point lo_, hi_;
  bool qa_;

  std::vector<Eigen::Index> interior_;
  std::vector<Point> far_pts_;
  std::vector<double> far_w_;
  std::vector<int> far_cell_;  // cell index (i, j) packed as i + (N-1) j
  std::vector<GridFunction::Stencil> far_stencil_;
  Eigen::MatrixXd Wp_, Wq_;
  std::vector<std::vector<Near>> near_;
  std::vector<std::vector<Ext>> ext_w_;
};

}  // namespace nldp
