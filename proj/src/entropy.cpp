#include "pqsim/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "pqsim/error.hpp"

namespace pqsim {

namespace {

constexpr double kAlphaOneTol = 1e-9;

double clamp_to_bound(double s, int dim) {
  return std::clamp(s, 0.0, std::log2(static_cast<double>(dim)));
}

}  // namespace

double quantize(double x, int m) {
  if (m < 1) throw ContractViolation("quantize: precision m must be >= 1");
  const double y = std::ldexp(x, m);
  const double lo = std::floor(y);
  const double frac = y - lo;
  double k = lo;
  if (frac > 0.5) {
    k = lo + 1.0;
  } else if (frac == 0.5) {
    k = std::fmod(lo, 2.0) == 0.0 ? lo : lo + 1.0;
  }
  return std::ldexp(k, -m);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const RealVector eig = rho.eigenvalues();
  double s = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i) > kEigenvalueFloor) s -= eig(i) * std::log2(eig(i));
  }
  return clamp_to_bound(s, rho.dim());
}

double renyi_entropy(const DensityMatrix& rho, double alpha) {
  if (!(alpha >= 0.0)) throw ContractViolation("renyi_entropy: alpha must be >= 0");
  if (std::abs(alpha - 1.0) <= kAlphaOneTol) {
    throw ContractViolation("renyi_entropy: alpha = 1 is the von Neumann entropy");
  }
  const RealVector eig = rho.eigenvalues();
  double power_sum = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i) > kEigenvalueFloor) power_sum += std::pow(eig(i), alpha);
  }
  return clamp_to_bound(std::log2(power_sum) / (1.0 - alpha), rho.dim());
}

double entropy(const DensityMatrix& rho, double alpha) {
  if (std::abs(alpha - 1.0) <= kAlphaOneTol) return von_neumann_entropy(rho);
  return renyi_entropy(rho, alpha);
}

}  // namespace pqsim
