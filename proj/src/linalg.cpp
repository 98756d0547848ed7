#include "pqsim/linalg.hpp"

#include <cmath>

#include "pqsim/error.hpp"
#include "pqsim/random.hpp"

namespace pqsim::linalg {

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())) <= tol;
}

Matrix outer(const Vector& v) { return v * v.adjoint(); }

RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  RealVector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.cast<Complex>().asDiagonal() *
         solver.eigenvectors().adjoint();
}

Matrix matrix_power(const Matrix& m, int exponent) {
  if (exponent < 0) throw ContractViolation("matrix_power: negative exponent");
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

std::vector<Matrix> hermitian_basis(int dim) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(dim) * dim);
  const double s = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < dim; ++j) {
    Matrix e = Matrix::Zero(dim, dim);
    e(j, j) = 1.0;
    basis.push_back(e);
  }
  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      Matrix sym = Matrix::Zero(dim, dim);
      sym(j, k) = s;
      sym(k, j) = s;
      basis.push_back(sym);
      Matrix anti = Matrix::Zero(dim, dim);
      anti(j, k) = Complex(0.0, s);
      anti(k, j) = Complex(0.0, -s);
      basis.push_back(anti);
    }
  }
  return basis;
}

RealVector hermitian_coordinates(const Matrix& h) {
  const int dim = static_cast<int>(h.rows());
  RealVector coords(dim * dim);
  int p = 0;
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < dim; ++j) coords(p++) = h(j, j).real();
  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      // Tr(B h) for the symmetric and antisymmetric units.
      coords(p++) = r2 * h(j, k).real();
      coords(p++) = r2 * h(j, k).imag();
    }
  }
  return coords;
}

Matrix from_hermitian_coordinates(const RealVector& coords, int dim) {
  if (coords.size() != dim * dim) throw ContractViolation("hermitian coordinates: size mismatch");
  Matrix h = Matrix::Zero(dim, dim);
  const auto basis = hermitian_basis(dim);
  for (int p = 0; p < coords.size(); ++p) h += coords(p) * basis[static_cast<std::size_t>(p)];
  return h;
}

double ray_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ContractViolation("ray_distance: size mismatch");
  const Complex overlap = b.dot(a);  // <b|a>
  Complex phase(1.0, 0.0);
  if (std::abs(overlap) > 0.0) phase = overlap / std::abs(overlap);
  return (a - phase * b).cwiseAbs().maxCoeff();
}

Vector leading_eigenvector(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  return solver.eigenvectors().col(h.rows() - 1);
}

Matrix random_unitary(int dim, RandomStream& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

Vector random_unit_vector(int dim, RandomStream& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(rng.normal(), rng.normal());
  return v / v.norm();
}

}  // namespace pqsim::linalg
