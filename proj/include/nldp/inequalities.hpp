#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nldp/operator.hpp"
#include "nldp/params.hpp"

namespace nldp {

// Fuzz campaign summary. The witness holds the inputs of the smallest slack, in the order the
// campaign documents.
struct IneqReport {
  std::string name;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::vector<double> witness;
  double max_ratio = 0.0;  // check_singular: largest LHS / |b|^{r-1}, against its constant
  double ratio_bound = 0.0;
  bool ok() const { return violations == 0; }
};

// Slacks are RHS - LHS, evaluated in long double.
double check_revL1(double a, double b, double r);
double check_superlinear(double a, double b, double r, double q);
double check_singular(double a, double b, double r, double q);

// C^2 test function with declared sup norms of phi, |D phi| and |D^2 phi|.
struct C2Function {
  Field f;
  SplitFn split;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  std::string name;

  double operator()(const Point& x) const { return f(x); }
  // (phi(x) - phi(x + y)) through the power map, symmetrized in y; with a, each side carries
  // a(x, +-y).
  double symmetrized(const Point& x, const Point& y, double r, const CoefficientField* a = nullptr) const;

  static C2Function barrier();
  static C2Function affine(Point g, double c = 0.0);
  static C2Function constant(double c);
  // phi(x) = cos(k x_1)
  static C2Function cosine(double k);
};

enum class C2Mode { Rev3, Rev10, Rev11, Rev30 };
const char* c2_mode_name(C2Mode m);
C2Mode c2_mode_from(const std::string& s);

// Envelope c |y|^k with c assembled from the declared norms. exponent is p for Rev3 and Rev10,
// q for Rev11 and Rev30; a is used by the q-modes only.
struct C2Bound {
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  double power = 0.0;
  double slack() const { return rhs - lhs; }
};
C2Bound check_C2_bounds(const C2Function& phi, const Point& x, const Point& y, C2Mode mode, double exponent,
                        const CoefficientField& a = CoefficientField::zero());

enum class LocalMode { Rev5, Rev9, Rev6, Rev8, Rev31 };
const char* local_mode_name(LocalMode m);
LocalMode local_mode_from(const std::string& s);

struct IntegrabilityOptions {
  Point x;                  // empty: origin
  double rho = 1.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();  // Holder exponent of a, Rev8 only
  double rel_tol = 1e-3;
  int refinements = 3;
  bool enforce_hypotheses = true;
};

struct IntegrabilityResult {
  double value = 0.0;
  std::vector<double> history;  // one value per mesh
  double rel_change = 0.0;
  int shells = 0;
  double tail = 0.0;  // geometric extrapolation below the deepest shell
};

// Integral over y in B_rho of |symmetrized expression| times the mode's kernel. Throws
// DivergenceDetected when no refinement settles within rel_tol.
IntegrabilityResult check_local_integrability(const C2Function& phi, const ProblemParams& P, LocalMode mode,
                                              const IntegrabilityOptions& opt = {});
// Empty when the mode's exponent hypotheses hold.
std::string local_hypothesis_failure(const ProblemParams& P, LocalMode mode, double alpha);

struct FuzzOptions {
  std::uint64_t draws = 1000000;
  std::uint64_t seed = 20240917;
  int chunks = 64;
};

IneqReport fuzz_revL1(const FuzzOptions& opt = {});
IneqReport fuzz_superlinear(const FuzzOptions& opt = {});
IneqReport fuzz_singular(const FuzzOptions& opt = {});
IneqReport fuzz_C2(const FuzzOptions& opt = {});
std::vector<IneqReport> fuzz_all(const FuzzOptions& opt = {});

}  // namespace nldp
