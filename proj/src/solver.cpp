#include "nldp/solver.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

namespace nldp {

SolveReport iterate(const DiscreteOperator& L, Eigen::VectorXd& u, const SolveConfig& cfg) {
  if (!(cfg.residual_tol > 0)) throw InvalidArgument("solve: residual_tol must be positive");
  if (cfg.tau0 < 0) throw InvalidArgument("solve: tau0 must be positive");
  const auto& idx = L.interior();
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  const auto& P = L.params();
  Eigen::VectorXd f(m);
  {
    GridFunction g = L.grid(u);
    for (Eigen::Index r = 0; r < m; ++r) f(r) = P.f(g.node(idx[r]));
  }
  auto resid = [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(L.apply(v) - f); };

  SolveReport rep;
  Eigen::VectorXd r = resid(u);
  double res = r.lpNorm<Eigen::Infinity>();
  const double res0 = res;
  rep.residual_history.push_back(res);
  if (res <= cfg.residual_tol) {
    rep.flag = SolveReport::Flag::converged;
    rep.final_residual = res;
    return rep;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double tau = cfg.tau0;
  const bool matrix = cfg.precond != Preconditioner::none;
  if (cfg.precond == Preconditioner::linear) lu.compute(L.linear_matrix());
  if (matrix && tau == 0.0) tau = 1.0;
  if (!matrix && tau == 0.0) {
    Eigen::MatrixXd A = L.linear_matrix();
    tau = 0.5 / A.diagonal().maxCoeff();
  }
  int halvings = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (cfg.precond == Preconditioner::jacobian) {
      GridFunction g = L.grid(u);
      lu.compute(L.jacobian(&g));
    }
    Eigen::VectorXd d = matrix ? Eigen::VectorXd(lu.solve(r)) : r;
    for (;;) {
      Eigen::VectorXd trial = u;
      for (Eigen::Index k = 0; k < m; ++k) trial(idx[k]) -= tau * d(k);
      Eigen::VectorXd rt = resid(trial);
      double rest = rt.lpNorm<Eigen::Infinity>();
      bool ok = std::isfinite(rest);
      if (cfg.backtrack && (!ok || rest >= res)) {
        tau *= 0.5;
        if (++halvings >= 200) throw Stalled("solve: 200 consecutive step halvings at residual " + std::to_string(res));
        continue;
      }
      if (!ok || rest > 1e6 * res0) throw Diverged("solve: residual exceeded 1e6 times its initial value");
      if (cfg.backtrack) {
        halvings = 0;
        tau *= 1.1;
      }
      u = std::move(trial);
      r = std::move(rt);
      res = rest;
      break;
    }
    rep.iterations = it;
    rep.residual_history.push_back(res);
    spdlog::debug("solve: iteration {} residual {:.3e} tau {:.3e}", it, res, tau);
    if (res <= cfg.residual_tol) {
      rep.flag = SolveReport::Flag::converged;
      break;
    }
  }
  rep.final_residual = res;
  rep.tau = tau;
  return rep;
}

std::pair<GridFunction, SolveReport> solve(const ProblemParams& P, const SolveConfig& cfg) {
  P.validate();
  const int n = P.exponents.n;
  Eigen::VectorXd u;
  int warm_iters = 0;
  auto stages = cfg.continuation;
  const auto& e = P.exponents;
  if (stages.empty() && cfg.warm_start && e.p > 2.0) {
    // the p-term has a vanishing Jacobian on the flat cold start
    Exponents w = e;
    w.p = 2.0;
    w.q = std::max(2.0, std::min(e.q, 1.0 / (1.0 - e.t) + 1e-3));
    if (validate_exponents(w, P.homogeneous).ok) stages.emplace_back(w.p, w.q);
  }
  for (const auto& [p, q] : stages) {
    ProblemParams Ps = P.with_exponents(p, q);
    DiscreteOperator L(Ps, n, cfg.R, cfg.N, cfg.exterior, cfg.interp, cfg.discrete);
    if (u.size() == 0) u = L.initial();
    SolveConfig c = cfg;
    c.residual_tol = std::max(cfg.residual_tol, 1e-6);
    auto rep = iterate(L, u, c);
    warm_iters += rep.iterations;
    spdlog::info("solve: continuation stage p={} q={} residual {:.3e}", p, q, rep.final_residual);
  }
  DiscreteOperator L(P, n, cfg.R, cfg.N, cfg.exterior, cfg.interp, cfg.discrete);
  if (u.size() == 0) u = L.initial();
  auto rep = iterate(L, u, cfg);
  rep.iterations += warm_iters;
  spdlog::info("solve: {} after {} iterations, residual {:.3e}", rep.flag_name(), rep.iterations, rep.final_residual);
  return {L.grid(u), rep};
}

double residual(const GridFunction& u, const ProblemParams& P, const QuadratureSpec& Q, int stride) {
  auto q = Q.resolved(u);
  const int N = u.nodes_per_axis();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    int i = static_cast<int>(k % N), j = static_cast<int>(k / N);
    if (i % stride != 0 || j % stride != 0) continue;
    Point x = u.node(k);
    if (u.boundary_distance(x) < q.rho_near * (1 - 1e-12)) continue;
    worst = std::max(worst, std::abs(evaluate(u, x, P, Q).value - P.f(x)));
  }
  return worst;
}

}  // namespace nldp
