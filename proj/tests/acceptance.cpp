// One pass/fail line per acceptance criterion. Exit status is the number of failures.
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "nldp/config.hpp"
#include "nldp/constants.hpp"
#include "nldp/discrete_operator.hpp"
#include "nldp/inequalities.hpp"
#include "nldp/power.hpp"
#include "nldp/probes.hpp"
#include "nldp/reglab.hpp"
#include "nldp/scaling.hpp"
#include "nldp/solver.hpp"

using namespace nldp;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream msg;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      msg << " FAILED: " << what << ";";
    }
  }
};

int failures = 0;

void run(int id, const char* title, double limit, const std::function<void(Outcome&)>& body) {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.msg << " threw " << e.what() << ";";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit) {
    o.ok = false;
    o.msg << " over the time limit;";
  }
  failures += !o.ok;
  std::printf("[%s] %d %s (%.2f s, limit %.0f s)%s\n", o.ok ? "PASS" : "FAIL", id, title, secs, limit,
              o.msg.str().c_str());
  std::fflush(stdout);
}

const Exponents desk{1, 0.6, 0.5, 2.0, 2.2};

// --- 1 ---------------------------------------------------------------------------------------

void anchors(Outcome& o) {
  o.require(barrier_eval(point(0.5)) == 9.0 / 16.0, "beta(1/2) != 9/16");
  o.require(barrier_eval(point(0.75)) == 49.0 / 256.0, "beta(3/4) != 49/256");
  const double drop = barrier_eval(point(0.5)) - barrier_eval(point(0.75));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-20.0, -1.0);
  double worst = 0.0;
  int bitwise = 0;
  for (int k = 0; k < 100; ++k) {
    double kappa = std::exp2(U(rng));
    double th = theta(kappa);
    worst = std::max(worst, std::abs(th - 95.0 * kappa / 256.0) / (95.0 * kappa / 256.0));
    bitwise += th == kappa * drop;
  }
  o.require(worst <= 2 * std::numeric_limits<double>::epsilon(), "theta != 95 kappa / 256");
  o.require(bitwise == 100, "theta differs from kappa (beta(1/2) - beta(3/4))");
  o.msg << " max rel " << worst << ", bitwise " << bitwise << "/100";
}

// --- 2 ---------------------------------------------------------------------------------------

// Radial integral over r > 1/4 summed shell by shell [r, 2r] with a Gauss-Kronrod rule, cut off
// once the analytic tail bound is negligible.
double sigma_shells(double eta, const Exponents& e) {
  const double sp = e.s * e.p, tq = e.t * e.q;
  const double ap = sp - eta * (e.p - 1), aq = tq - eta * (e.q - 1);
  auto g = [&](double r) {
    double w = std::pow(8 * r, eta) - 1;
    return std::pow(w, e.p - 1) * std::pow(r, -1 - sp) + std::pow(w, e.q - 1) * std::pow(r, -1 - tq);
  };
  auto tail = [&](double R) {
    return std::pow(8.0, eta * (e.p - 1)) * std::pow(R, -ap) / ap + std::pow(8.0, eta * (e.q - 1)) * std::pow(R, -aq) / aq;
  };
  double sum = 0.0, r = 0.25;
  for (int k = 0; k < 1000; ++k) {
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, r, 2 * r, 8, 1e-13);
    r *= 2;
    if (tail(r) < 1e-13 * sum) break;
  }
  const double omega = e.n == 1 ? 2.0 : 2.0 * M_PI;
  return std::pow(2.0, e.q - 1) * omega * sum;
}

void sigma_check(Outcome& o) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  int outside = 0, draws = 0;
  while (draws < 20) {
    Exponents e;
    e.n = U(rng) < 0.5 ? 1 : 2;
    e.s = 0.15 + 0.8 * U(rng);
    e.t = 0.15 + (e.s - 0.15) * U(rng);
    e.p = 1.2 + 1.8 * U(rng);
    e.q = e.p * (1 + std::min(e.s, e.s / e.t - 1) * U(rng));
    if (!validate_exponents(e).ok) continue;
    auto P = ProblemParams::model(e, CoefficientField::constant(1.0));
    double eta = (0.05 + 0.9 * U(rng)) * growth_threshold(e, true);
    double got = sigma(eta, P), ref = sigma_shells(eta, e);
    worst = std::max(worst, std::abs(got - ref) / ref);
    auto band = sigma_bounds(eta, e);
    if (got < band.lo || got > band.hi) {
      ++outside;
      std::printf("  warning: sigma %.6g outside [%.6g, %.6g] (n=%d s=%.3f t=%.3f p=%.3f q=%.3f eta=%.4g)\n", got,
                  band.lo, band.hi, e.n, e.s, e.t, e.p, e.q, eta);
    }
    ++draws;
  }
  o.require(worst <= 1e-8, "sigma differs from the shell oracle");
  o.msg << " max rel " << worst << ", outside band " << outside << "/20 (soft)";
}

// --- 3 ---------------------------------------------------------------------------------------

double beta1(double x) { return barrier_eval(point(x)); }

// PV integral of (beta(x) - beta(x+y)) |y|^{-1-sp}, by tanh-sinh / exp-sinh on the folded
// second difference, at tighter tolerance and a finer level than the operator's own rule.
double beta_reference(double x, double sp) {
  const double w = 1 - x * x;
  auto f = [&](double y) {
    if (!(y > 1e-100)) return 0.0;
    double d = std::abs(x) + y < 1 ? y * y * (4 * w - 8 * x * x - 2 * y * y) : 2 * beta1(x) - beta1(x + y) - beta1(x - y);
    return d * std::pow(y, -1 - sp);
  };
  boost::math::quadrature::tanh_sinh<double> ts(20);
  boost::math::quadrature::exp_sinh<double> es;
  double b1 = 1 - std::abs(x), b2 = 1 + std::abs(x);
  double v = ts.integrate(f, 0.0, b1, 1e-15) + ts.integrate(f, b1, b2, 1e-15);
  return v + es.integrate(f, b2, std::numeric_limits<double>::infinity(), 1e-15);
}

void operator_oracle(Outcome& o) {
  auto P = ProblemParams::model({1, 0.6, 0.4, 2.0, 2.0});
  auto beta = C2Function::barrier();
  FieldGeometry geo;
  geo.has_box = true;
  geo.lo = point(-1.0);
  geo.hi = point(1.0);
  auto u = GridFunction::sample(1, 1.0, 257, barrier_eval, Exterior::constant(0));
  double worst = 0.0, sampled = 0.0;
  for (double x : {-0.85, -0.6, -0.41, -0.13, 0.0, 0.13, 0.41, 0.6, 0.85}) {
    double ref = beta_reference(x, 1.2);
    auto e = evaluate_field(beta.f, point(x), P, geo, 1e-10, 7, beta.split);
    worst = std::max(worst, std::abs(e.value - ref) / std::abs(ref));
    sampled = std::max(sampled, std::abs(evaluate(u, point(x), P).value - ref) / std::abs(ref));
  }
  o.require(worst <= 1e-6, "evaluate differs from the reference quadrature");
  o.msg << " (spline-sampled beta at 257 nodes: " << sampled << ")";

  auto Ps = ProblemParams::model({1, 0.6, 0.4, 2.0, 2.0}, CoefficientField::zero(), 1.0, SourceTerm::constant(1.0));
  SolveConfig cfg;
  cfg.N = 256;
  cfg.exterior = Exterior::constant(0.0);
  cfg.residual_tol = 1e-11;
  DiscreteOperator L(Ps, 1, cfg.R, cfg.N, cfg.exterior);
  const auto& idx = L.interior();
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd zero = L.initial();
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::VectorXd e = zero;
    e(idx[c]) = 1.0;
    A.col(c) = L.apply(e);
  }
  Eigen::VectorXd ref = A.partialPivLu().solve(Eigen::VectorXd::Ones(m));
  auto [sol, rep] = solve(Ps, cfg);
  double gap = 0.0;
  for (Eigen::Index c = 0; c < m; ++c) gap = std::max(gap, std::abs(sol.values()(idx[c]) - ref(c)));
  o.require(rep.converged(), "solve did not converge");
  o.require(gap <= 1e-6, "solve differs from the dense solve");
  o.msg << " eval max rel " << worst << ", solve max abs " << gap;
}

// --- 4 ---------------------------------------------------------------------------------------

void scaling(Outcome& o) {
  auto P = ProblemParams::model(desk, CoefficientField::constant(1.0));
  auto u = GridFunction::sample(1, 2.0, 257, barrier_eval, Exterior::constant(0.0));
  auto id = scaling_identity_check(u, P, ScalingContext::identity(1));
  o.require(id.max_rel == 0.0, "identity context is not exact");
  double worst = 0.0;
  for (auto [lam, mu] : {std::pair{2.0, 0.5}, std::pair{0.5, 2.0}, std::pair{1.0, 1.0}}) {
    auto c = scaling_identity_check(u, P, ScalingContext::rescale(lam, mu, Point::Zero(1)));
    worst = std::max(worst, c.max_rel);
  }
  o.require(worst <= 1e-5, "rescaled discrepancy above 1e-5");
  o.msg << " max rel " << worst;
}

// --- 5 ---------------------------------------------------------------------------------------

void inequalities(Outcome& o) {
  FuzzOptions f;
  f.draws = 1000000;
  for (const auto& r : {fuzz_revL1(f), fuzz_superlinear(f), fuzz_singular(f)}) {
    o.require(r.samples == f.draws && r.violations == 0, r.name + " violations");
    o.msg << " " << r.name << " " << r.violations << "/" << r.samples << ",";
  }

  auto beta = C2Function::barrier();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto mode : {C2Mode::Rev3, C2Mode::Rev10, C2Mode::Rev11, C2Mode::Rev30}) {
    int bad = 0;
    for (int k = 0; k < 10000; ++k) {
      int n = U(rng) < 0.5 ? 1 : 2;
      Point x(n), y(n);
      for (int d = 0; d < n; ++d) x(d) = 1.5 * (2 * U(rng) - 1);
      for (int d = 0; d < n; ++d) y(d) = 2 * U(rng) - 1;
      if (y.norm() == 0.0) y(0) = 1.0;
      y *= (U(rng) < 0.7 ? std::pow(10.0, -8.0 * U(rng)) : 3.0 * U(rng)) / y.norm();
      std::optional<CoefficientField> a;
      double r = 2.0;
      switch (mode) {
        case C2Mode::Rev3: r = 2.0 + 2.0 * U(rng); break;
        case C2Mode::Rev10: r = 1.05 + 0.9 * U(rng); break;
        case C2Mode::Rev11: r = 1.05 + 2.95 * U(rng); a = CoefficientField::checkerboard(n, 0.3, 0.2, 1.1); break;
        case C2Mode::Rev30: r = 2.0 + 2.0 * U(rng); a = CoefficientField::constant(0.7); break;
      }
      auto b = a ? check_C2_bounds(beta, x, y, mode, r, *a) : check_C2_bounds(beta, x, y, mode, r);
      double M = a ? a->M() : 1.0;
      double dp = std::abs(beta(x) - beta(Point(x + y))), dm = std::abs(beta(x) - beta(Point(x - y)));
      double scale = b.rhs + M * (std::pow(dp, r - 1) + std::pow(dm, r - 1)) + 1e-300;
      bad += b.slack() < -1e-12 * scale;
    }
    o.require(bad == 0, std::string(c2_mode_name(mode)) + " violations");
    o.msg << " " << c2_mode_name(mode) << " " << bad << "/10000,";
  }

  auto P = ProblemParams::model(desk, CoefficientField::constant(1.0));
  int checked = 0;
  for (auto m : {LocalMode::Rev5, LocalMode::Rev9, LocalMode::Rev6, LocalMode::Rev8, LocalMode::Rev31}) {
    if (!local_hypothesis_failure(P, m, std::numeric_limits<double>::quiet_NaN()).empty()) continue;
    auto r = check_local_integrability(beta, P, m);
    o.require(std::isfinite(r.value) && r.rel_change <= 1e-3, std::string(local_mode_name(m)) + " drift");
    o.msg << " " << local_mode_name(m) << " drift " << r.rel_change << ",";
    ++checked;
  }
  o.require(checked > 0, "no integrability mode applies");
}

// --- 6 ---------------------------------------------------------------------------------------

void selection(Outcome& o) {
  auto P = ProblemParams::model(desk, CoefficientField::constant(1.0), 1.0);
  const double eps = unit_ball_volume(1) / 2;
  auto sel = choose_eta_kappa(eps, P);
  o.require(sel.certificate.ok(), "selection certificate");
  std::mt19937_64 rng(6);
  auto cert = certify(eps, sel.eta, sel.kappa, P, random_ball(1, 32, 0.75, rng));
  const double budget = eps / std::pow(2.0, 1 + 0.6 * 2.0 + 2.2);
  o.require(std::abs(cert.budget - budget) <= 1e-15 * budget, "budget differs from eps / (Lambda 2^{n+sp+q})");
  bool seen = false;
  for (const auto& r : cert.regimes) {
    if (r.regime != Regime::P10) continue;
    seen = true;
    o.require(r.worst_total <= budget + cert.quad_error, "P10 terms above the budget");
    o.msg << " eta " << sel.eta << " kappa " << sel.kappa << ", P10 worst " << r.worst_total << " <= " << budget;
  }
  o.require(seen, "P10 not certified");
}

// --- 7, 8 ------------------------------------------------------------------------------------

std::optional<PipelineResult> pipeline;

void pipeline_check(Outcome& o) {
  auto cfg = load_config(std::string(NLDP_SOURCE_DIR) + "/configs/pipeline_1d.json");
  PipelineOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.levels = cfg.levels;
  opt.x0 = cfg.center;
  opt.selection = cfg.selection;
  opt.dyadic.quad = cfg.quadrature;
  pipeline = run_pipeline(cfg.problem, cfg.solve, opt);
  const auto& res = *pipeline;
  const auto& tr = res.trace;
  o.require(res.solve.converged(), "solve did not converge");
  o.require(!tr.breakdown, "breakdown: " + tr.breakdown_reason);
  o.require(tr.resolvable >= 5, "fewer than 5 resolvable levels");
  int done = 0;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& L : tr.levels) {
    if (L.level == 0) continue;
    ++done;
    for (const auto& b : L.blowup) o.require(b.ok, "level " + std::to_string(L.level) + " " + b.name);
    for (const auto& h : L.hypotheses) o.require(h.ok, "level " + std::to_string(L.level) + " " + h.name);
    o.require(L.hypotheses.size() == 4, "four hypotheses per level");
    o.require(L.conclusion_ok && L.conclusion_margin > 0, "conclusion at level " + std::to_string(L.level));
    o.require(L.bound_ok && L.measured.osc <= L.bound, "oscillation bound at level " + std::to_string(L.level));
    margin = std::min(margin, L.conclusion_margin);
  }
  o.require(done >= 5 && done >= std::min(cfg.levels, tr.resolvable), "levels completed");
  o.msg << " levels " << done << ", gamma " << tr.gamma << ", min conclusion margin " << margin;
}

void holder_check(Outcome& o) {
  auto root = GridFunction::sample(1, 1.0, 1025, [](const Point& x) { return std::sqrt(std::abs(x(0))); },
                                   Exterior::constant(1.0));
  auto affine = GridFunction::sample(1, 1.0, 1025, [](const Point& x) { return 0.7 * x(0) + 0.2; },
                                     Exterior::linear(0.7));
  double g1 = holder_fit(root, point(0.0), 1, 5).gamma, g2 = holder_fit(affine, point(0.0), 1, 5).gamma;
  o.require(std::abs(g1 - 0.5) <= 0.05, "|x|^0.5 fit");
  o.require(std::abs(g2 - 1.0) <= 0.05, "affine fit");
  o.msg << " sqrt " << g1 << ", affine " << g2;
  o.require(pipeline.has_value(), "pipeline unavailable");
  if (!pipeline) return;
  const auto& tr = pipeline->trace;
  o.require(std::isfinite(tr.fitted_gamma) && tr.fitted_gamma >= pipeline->bundle.gamma - 0.05, "pipeline gamma_hat");
  o.msg << ", pipeline gamma_hat " << tr.fitted_gamma << " vs gamma " << pipeline->bundle.gamma;
}

// --- 9 ---------------------------------------------------------------------------------------

void comparison(Outcome& o) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_solve = -std::numeric_limits<double>::infinity(), worst_touch = worst_solve;
  int pairs = 0;
  while (pairs < 10) {
    Exponents e{1, 0.5 + 0.3 * U(rng), 0.0, 2.0 + 0.4 * U(rng), 0.0};
    e.t = 0.3 + (e.s - 0.3) * U(rng);
    e.q = e.p * (1 + std::min(e.s, e.s / e.t - 1) * U(rng));
    if (!validate_exponents(e).ok) continue;
    auto a = CoefficientField::halfspace(point(U(rng) < 0.5 ? 1.0 : -1.0), 0.6 * U(rng) - 0.3, 0.5 + U(rng));
    double c = U(rng), ext = 0.4 * U(rng) - 0.2;
    auto P1 = ProblemParams::model(e, a, 1.0, SourceTerm::constant(c));
    auto P2 = ProblemParams::model(e, a, 1.0, SourceTerm::step(c + 0.5 * U(rng), c + 0.5 * U(rng)));
    SolveConfig cfg;
    cfg.N = 65;
    cfg.exterior = Exterior::constant(ext);
    cfg.residual_tol = 1e-9;
    auto [u1, r1] = solve(P1, cfg);
    auto [u2, r2] = solve(P2, cfg);
    o.require(r1.converged() && r2.converged(), "paired solve did not converge");
    double gap = (u1.values() - u2.values()).maxCoeff();
    worst_solve = std::max(worst_solve, gap);
    o.require(gap <= 1e-6, "f1 <= f2 but u1 > u2 + tol");

    // v = u + a nonnegative bump vanishing at a node xb, with a larger exterior
    auto g = [k = 0.5 + 2 * U(rng), ph = 6.3 * U(rng)](const Point& x) { return std::sin(k * x(0) + ph); };
    const double amp = 0.5 * U(rng), lift = 0.2 * U(rng);
    auto uu = GridFunction::sample(1, 2.0, 129, g, Exterior::constant(ext));
    const double xb = uu.node(static_cast<Eigen::Index>(40 + 48 * U(rng)))(0);
    auto vv = GridFunction::sample(1, 2.0, 129, [&](const Point& x) { return g(x) + amp * (1 - std::cos(x(0) - xb)); },
                                   Exterior::constant(ext + 2 * amp + lift));
    auto A = evaluate(uu, point(xb), P1), B = evaluate(vv, point(xb), P1);
    double excess = B.value - A.value - A.error - B.error;
    worst_touch = std::max(worst_touch, excess);
    o.require(excess <= 0.0, "operator not monotone at a touching point");
    ++pairs;
  }
  o.msg << " max(u1 - u2) " << worst_solve << ", max(Lv - Lu - err) " << worst_touch
        << " (larger source, larger solution)";
}

}  // namespace

int main() {
  run(1, "exact constant anchors", 1, anchors);
  run(2, "sigma quadrature vs shell oracle", 30, sigma_check);
  run(3, "operator and solver oracles", 120, operator_oracle);
  run(4, "scaling identity", 60, scaling);
  run(5, "inequality campaigns", 120, inequalities);
  run(6, "constants selection certificate", 300, selection);
  run(7, "growth lemma and dyadic pipeline", 900, pipeline_check);
  run(8, "Holder fit calibration", 60, holder_check);
  run(9, "comparison principles", 600, comparison);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
