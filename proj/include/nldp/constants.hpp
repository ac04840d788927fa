#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "nldp/params.hpp"

namespace nldp {

// Surface measure of the unit sphere: 2 for n = 1, 2 pi for n = 2.
double omega_n(int n);

double sigma(double eta, const ProblemParams& P);

struct SigmaBand {
  double lo = 0.0;
  double hi = 0.0;
};
SigmaBand sigma_bounds(double eta, const Exponents& e);

enum class Regime { P10, P11, P12 };
const char* regime_name(Regime r);
// Estimate bundles whose exponent hypotheses hold for e.
std::vector<Regime> applicable_regimes(const Exponents& e);

// Weighted terms of one estimate bundle at one point.
struct TermValues {
  static constexpr int count = 5;
  static constexpr std::array<const char*, count> names = {"I_p", "I_q", "II_p", "II_q", "III"};
  std::array<double, count> v{};
  double total() const;
};

// Unweighted integrals at x that the bundles are assembled from.
struct BarrierIntegrals {
  // Over x + y in B_1, no kappa factor. Ap_abs is infinite when p(1 - s) <= 1.
  double Ap_signed = 0, Ap_abs = 0, Aq = 0;
  double Kout_p = 0, Kout_q = 0;             // kernel masses over x + y outside B_1 (q-part with c_hat a)
  double Bp = 0, Bq = 0;                     // exterior barrier terms at (eta, kappa)
  double Cp = 0, Cq = 0, Cqa = 0;            // |y| > 1/4 growth terms; Cqa carries a but not c_hat
  double beta_x = 0;
  double error = 0;
};

struct CertificateOptions {
  double tol = 1e-10;
};

BarrierIntegrals barrier_integrals(const Point& x, double eta, double kappa, const ProblemParams& P,
                                   const CertificateOptions& opt = {});
TermValues regime_terms(Regime r, const BarrierIntegrals& b, double kappa, const ProblemParams& P);

// Bound on the right-hand side of every bundle.
double selection_budget(double epsilon, const ProblemParams& P);

struct RegimeCertificate {
  Regime regime = Regime::P10;
  std::array<double, TermValues::count> worst{};  // max over probes of each term
  double worst_total = 0.0;
  double margin = 0.0;  // budget - worst_total
};

struct Certificate {
  double budget = 0.0;
  double quad_error = 0.0;
  int probes = 0;
  int eta_halvings = 0;
  int kappa_halvings = 0;
  double c_com2 = 0.0;       // measured constant of the kappa-dependent terms
  double kappa_cap = 0.0;    // (sigma / (2 c_com2))^{1/(p-1)}
  std::vector<RegimeCertificate> regimes;
  bool ok() const;
};

// Re-evaluates all bundles at the given points.
Certificate certify(double epsilon, double eta, double kappa, const ProblemParams& P, const std::vector<Point>& xs,
                    const CertificateOptions& opt = {});

struct SelectionOptions {
  int probes = 32;  // plus the origin
  int max_halvings = 60;
  CertificateOptions quad;
};

struct Selection {
  double eta = 0.0;
  double kappa = 0.0;
  double sigma = 0.0;
  Certificate certificate;
};

Selection choose_eta_kappa(double epsilon, const ProblemParams& P, const SelectionOptions& opt = {});

double theta(double kappa);
double gamma_exponent(double theta, double eta);
double lambda_rescale(double u_sup, double f_sup, double sigma, double p);

struct ConstantsBundle {
  double epsilon = 0, eta = 0, kappa = 0, sigma = 0, sigma_lo = 0, sigma_hi = 0;
  double theta = 0, gamma = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // needs u_sup and f_sup
  double omega_n = 0;
  bool sigma_in_band = true;
  bool experimental = false;  // homogeneous relaxation of the exponent bounds
  Certificate certificate;
};

// epsilon <= 0 selects |B_1| / 2. u_sup < 0 leaves lambda unset.
ConstantsBundle compute_constants(const ProblemParams& P, double epsilon = 0.0, double u_sup = -1.0,
                                  const SelectionOptions& opt = {});

double unit_ball_volume(int n);

}  // namespace nldp
