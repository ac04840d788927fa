#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace nldp {

// Points and offsets live in R^1 or R^2.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;

inline Point point(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "Error"; }
};

#define NLDP_ERROR(Name)                                              \
  struct Name : Error {                                               \
    using Error::Error;                                               \
    const char* code() const noexcept override { return #Name; }      \
  }

NLDP_ERROR(InvalidArgument);
NLDP_ERROR(KernelBoundViolation);
NLDP_ERROR(NonIntegrableNearField);
NLDP_ERROR(TailDivergence);
NLDP_ERROR(TouchViolation);
NLDP_ERROR(DivergentSigma);
NLDP_ERROR(SelectionFailed);
NLDP_ERROR(DegenerateScaling);
NLDP_ERROR(InductionViolation);
NLDP_ERROR(Diverged);
NLDP_ERROR(Stalled);
NLDP_ERROR(DegenerateFit);
NLDP_ERROR(HypothesisUnverifiable);
NLDP_ERROR(IterationBreakdown);
NLDP_ERROR(DivergenceDetected);
NLDP_ERROR(ConfigError);

#undef NLDP_ERROR

// Value with an absolute error estimate.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

}  // namespace nldp
