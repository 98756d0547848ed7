#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace pqsim {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

class RandomStream;

namespace linalg {

double max_abs(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol);
bool is_unitary(const Matrix& m, double tol);

/// |v><v|
Matrix outer(const Vector& v);

/// Eigenvalues of a Hermitian matrix, ascending.
RealVector hermitian_eigenvalues(const Matrix& m);

/// Square root of a positive semi-definite matrix; negative eigenvalues are
/// clipped to zero.
Matrix psd_sqrt(const Matrix& m);

/// Non-negative integer power by repeated squaring.
Matrix matrix_power(const Matrix& m, int exponent);

/// Orthonormal (Hilbert-Schmidt) basis of the real vector space of d x d
/// Hermitian matrices: diagonal units, then symmetric and antisymmetric
/// off-diagonal pairs.
std::vector<Matrix> hermitian_basis(int dim);

/// Real coordinates of a Hermitian matrix in hermitian_basis(dim).
RealVector hermitian_coordinates(const Matrix& h);
Matrix from_hermitian_coordinates(const RealVector& coords, int dim);

/// Phase-independent distance: max_i |a_i - e^{i theta} b_i| with theta
/// chosen to align b to a on their overlap.
double ray_distance(const Vector& a, const Vector& b);

/// Eigenvector of the largest eigenvalue of a Hermitian matrix.
Vector leading_eigenvector(const Matrix& h);

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
Matrix random_unitary(int dim, RandomStream& rng);

/// Normalized complex Gaussian vector, i.e. a Haar-random unit vector.
Vector random_unit_vector(int dim, RandomStream& rng);

}  // namespace linalg
}  // namespace pqsim
