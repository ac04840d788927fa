#pragma once

#include <cmath>

#include "nldp/types.hpp"

namespace nldp {

// |d|^{r-2} d, extended by 0 at d = 0.
template <class Scalar>
inline Scalar power_map(Scalar d, Scalar r) {
  using std::abs;
  using std::pow;
  if (d == Scalar(0)) return Scalar(0);
  if (r == Scalar(2)) return d;
  Scalar m = pow(abs(d), r - Scalar(1));
  return d > Scalar(0) ? m : -m;
}

template <class Scalar>
inline Scalar abs_pow(Scalar d, Scalar e) {
  using std::abs;
  using std::pow;
  if (d == Scalar(0)) return Scalar(0);
  if (e == Scalar(1)) return abs(d);
  return pow(abs(d), e);
}

// beta(x) = ((1 - |x|^2)^+)^2 and its derivatives.
template <class Scalar>
inline Scalar barrier_radial(Scalar r2) {
  Scalar w = Scalar(1) - r2;
  return w > Scalar(0) ? w * w : Scalar(0);
}

inline double barrier_eval(const Point& x) { return barrier_radial(x.squaredNorm()); }

inline Point barrier_grad(const Point& x) {
  double w = 1.0 - x.squaredNorm();
  if (w <= 0.0) return Point::Zero(x.size());
  return -4.0 * w * x;
}

inline Eigen::MatrixXd barrier_hess(const Point& x) {
  const auto n = x.size();
  double w = 1.0 - x.squaredNorm();
  if (w <= 0.0) return Eigen::MatrixXd::Zero(n, n);
  return 8.0 * x * x.transpose() - 4.0 * w * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace nldp
