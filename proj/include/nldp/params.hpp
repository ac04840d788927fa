#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nldp/types.hpp"

namespace nldp {

struct Exponents {
  int n = 1;
  double s = 0.5;
  double t = 0.5;
  double p = 2.0;
  double q = 2.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// homogeneous = true drops only the q/p <= 1+s bound.
ValidationReport validate_exponents(const Exponents& e, bool homogeneous = false);

// min{sp/(p-1), tq/(q-1)}; the second entry is skipped when the q-phase is off.
double growth_threshold(const Exponents& e, bool q_phase = true);

struct KernelOrder {
  double s = 0.5;
  double p = 2.0;
};

// K(x,y) = c(x,y) |y|^{-n-sp} with the modulation c in [1/Lambda, Lambda].
class KernelField {
 public:
  using Modulation = std::function<double(const Point&, const Point&)>;

  KernelField();
  KernelField(int n, KernelOrder order, double Lambda, Modulation c, std::string tag,
              bool translation_invariant, bool probe = true);

  double operator()(const Point& x, const Point& y) const;
  double modulation(const Point& x, const Point& y) const;

  int dim() const { return n_; }
  const KernelOrder& order() const { return order_; }
  double sp() const { return order_.s * order_.p; }
  double Lambda() const { return Lambda_; }
  const std::string& tag() const { return tag_; }
  bool gagliardo() const { return gagliardo_; }
  bool translation_invariant() const { return translation_invariant_; }

  KernelField with_order(KernelOrder order) const;
  // mu^{n+sp} K(mu x + x0, mu y)
  KernelField transformed(double mu, const Point& x0) const;

  // Samples 1000 (x,y) pairs; throws KernelBoundViolation.
  void probe_bounds(unsigned long long seed = 17) const;

 private:
  friend KernelField gagliardo_kernel(int n, KernelOrder order);

  int n_ = 1;
  KernelOrder order_;
  double Lambda_ = 1.0;
  std::shared_ptr<const Modulation> c_;
  std::string tag_;
  bool gagliardo_ = true;
  bool translation_invariant_ = true;
};

KernelField gagliardo_kernel(int n, KernelOrder order);
// c(x,y) = Lambda^{cos(2 pi x_1 / period)}
KernelField scaled_kernel(int n, KernelOrder order, double Lambda, double period = 1.0);
// c depends on |y| through a piecewise-linear table, clamped at both ends.
KernelField table_kernel(int n, KernelOrder order, double Lambda, std::vector<double> radii,
                         std::vector<double> values);

class CoefficientField {
 public:
  using Fn = std::function<double(const Point&, const Point&)>;
  // Radii r in (0, rmax] where y -> a(x, r dir) may jump.
  using RayBreaks = std::function<void(const Point& x, const Point& dir, double rmax, std::vector<double>& out)>;

  CoefficientField();
  CoefficientField(double M, Fn a, std::string tag, bool symmetric, bool translation_invariant,
                   bool probe = true);

  static CoefficientField zero();
  static CoefficientField constant(double value);
  // value on {normal . x > offset}, 0 elsewhere; depends on x only
  static CoefficientField halfspace(Point normal, double offset, double value);
  // (cb(x) + cb(x+y)) / 2 with cb alternating low/high on square cells
  static CoefficientField checkerboard(int n, double cell, double low, double high);
  // piecewise-linear in x_1
  static CoefficientField table(std::vector<double> xs, std::vector<double> values);
  // min(|x - y|^alpha, M)
  static CoefficientField holder(double alpha, double M);

  double operator()(const Point& x, const Point& y) const { return is_zero_ ? 0.0 : (*a_)(x, y); }

  double M() const { return M_; }
  bool is_zero() const { return is_zero_; }
  bool symmetric() const { return symmetric_; }
  bool translation_invariant() const { return translation_invariant_; }
  const std::string& tag() const { return tag_; }

  // factor * a(mu x + x0, mu y), bound factor * M
  CoefficientField transformed(double factor, double mu, const Point& x0) const;

  void probe_bounds(int n, unsigned long long seed = 23) const;

  void ray_breaks(const Point& x, const Point& dir, double rmax, std::vector<double>& out) const {
    if (breaks_) (*breaks_)(x, dir, rmax, out);
  }
  CoefficientField with_ray_breaks(RayBreaks b) const;

 private:
  double M_ = 0.0;
  std::shared_ptr<const Fn> a_;
  std::shared_ptr<const RayBreaks> breaks_;
  std::string tag_ = "zero";
  bool is_zero_ = true;
  bool symmetric_ = true;
  bool translation_invariant_ = true;
};

struct SourceTerm {
  std::function<double(const Point&)> f = [](const Point&) { return 0.0; };
  double sup = 0.0;
  std::string tag = "zero";

  double operator()(const Point& x) const { return f(x); }

  static SourceTerm zero() { return {}; }
  static SourceTerm constant(double c);
  static SourceTerm cosine(double amplitude, double frequency);
  // left for x_1 < 0, right otherwise
  static SourceTerm step(double left, double right);
  SourceTerm scaled(double factor) const;
};

struct ProblemParams {
  Exponents exponents;
  KernelField Ksp;
  KernelField Ktq;
  CoefficientField a;
  double c_hat = 1.0;
  SourceTerm f;
  bool homogeneous = false;

  double M_hat() const { return c_hat * a.M(); }
  double Lambda() const;
  bool q_phase() const { return !a.is_zero(); }

  // Gagliardo kernels for the given exponents.
  static ProblemParams model(const Exponents& e, CoefficientField a = CoefficientField::zero(),
                             double c_hat = 1.0, SourceTerm f = SourceTerm::zero());
  ProblemParams with_exponents(double p, double q) const;
  void validate() const;
};

}  // namespace nldp
