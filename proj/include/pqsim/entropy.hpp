#pragma once

#include "pqsim/state.hpp"

namespace pqsim {

/// Eigenvalues below this are treated as exactly zero in entropy sums.
inline constexpr double kEigenvalueFloor = 1e-12;

/// Nearest multiple of 2^-m, ties to the even multiple. Requires m >= 1.
double quantize(double x, int m);

/// -sum lambda log2 lambda, in bits.
double von_neumann_entropy(const DensityMatrix& rho);

/// (1/(1-alpha)) log2 Tr(rho^alpha), in bits. Requires alpha >= 0 and
/// |alpha - 1| > 1e-9.
double renyi_entropy(const DensityMatrix& rho, double alpha);

/// Renyi entropy with alpha = 1 (within 1e-9) routed to von Neumann.
double entropy(const DensityMatrix& rho, double alpha);

}  // namespace pqsim
