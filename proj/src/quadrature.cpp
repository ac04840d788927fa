#include "nldp/quadrature.hpp"

#include <map>
#include <mutex>

namespace nldp::quad {

const Rule& gauss_legendre(int n) {
  static std::map<int, Rule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int k = 0; k < n; ++k) {
    r.x.push_back(es.eigenvalues()(k));
    double v = es.eigenvectors()(0, k);
    r.w.push_back(2.0 * v * v);
  }
  // Symmetrize to kill eigen-solver noise.
  for (int k = 0; k < n / 2; ++k) {
    double x = 0.5 * (r.x[n - 1 - k] - r.x[k]);
    double w = 0.5 * (r.w[k] + r.w[n - 1 - k]);
    r.x[k] = -x;
    r.x[n - 1 - k] = x;
    r.w[k] = r.w[n - 1 - k] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return cache.emplace(n, std::move(r)).first->second;
}

Rule tanh_sinh_rule(int level, double dmin) {
  Rule r;
  double h = std::ldexp(1.0, -level);
  for (int k = -static_cast<int>(std::ceil(4.5 / h));; ++k) {
    double t = k * h;
    double u = 0.5 * std::numbers::pi * std::sinh(t);
    double e = std::exp(-2.0 * std::abs(u));
    double small = e / (1.0 + e);
    double x = t < 0 ? small : 1.0 - small;
    double ch = std::cosh(u);
    double w = h * 0.25 * std::numbers::pi * std::cosh(t) / (ch * ch);
    if (t < 0 && x < dmin) continue;
    if (t > 0 && (small < 1e-16 || w < 1e-300)) break;
    r.x.push_back(x);
    r.w.push_back(w);
  }
  return r;
}

}  // namespace nldp::quad
