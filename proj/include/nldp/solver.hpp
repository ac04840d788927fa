#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nldp/discrete_operator.hpp"
#include "nldp/operator.hpp"

namespace nldp {

// jacobian: refreshed each step from the current iterate; linear: the fixed p = 2 matrix.
enum class Preconditioner { jacobian, linear, none };

struct SolveConfig {
  double R = 1.0;
  int N = 65;  // nodes per axis
  Exterior exterior;
  Interp interp = Interp::cubic;
  double tau0 = 0.0;  // 0: 1 with a matrix preconditioner, 0.5 / max diagonal without
  double residual_tol = 1e-8;
  int max_iters = 500;
  bool backtrack = true;
  Preconditioner precond = Preconditioner::jacobian;
  std::vector<std::pair<double, double>> continuation;  // (p, q) warm-start stages
  bool warm_start = true;  // without stages: a p = 2 stage first when p > 2
  DiscreteSpec discrete;
};

struct SolveReport {
  enum class Flag { converged, max_iters };
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
  Flag flag = Flag::max_iters;
  double tau = 0.0;

  bool converged() const { return flag == Flag::converged; }
  std::string flag_name() const { return flag == Flag::converged ? "converged" : "max_iters"; }
};

// Damped pseudo-time iteration u <- u - tau P^{-1}(L_h u - f) on interior nodes; the residual is
// the max-norm of L_h u - f. Throws Diverged (residual above 1e6 times the initial one) or Stalled
// (200 consecutive step halvings).
std::pair<GridFunction, SolveReport> solve(const ProblemParams& P, const SolveConfig& cfg);

// Same iteration on a prebuilt discretization, from the given start values.
SolveReport iterate(const DiscreteOperator& L, Eigen::VectorXd& values, const SolveConfig& cfg);

// max |evaluate(u, x) - f(x)| over nodes at distance >= rho_near from the box boundary, every
// stride-th node per axis.
double residual(const GridFunction& u, const ProblemParams& P, const QuadratureSpec& Q = {}, int stride = 1);

}  // namespace nldp
