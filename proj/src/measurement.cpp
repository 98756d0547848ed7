#include "pqsim/measurement.hpp"

#include <cmath>
#include <string>

#include "pqsim/error.hpp"
#include "pqsim/random.hpp"

namespace pqsim {

namespace {

constexpr double kOperatorTol = 1e-9;
constexpr double kProbabilityClamp = 1e-12;

}  // namespace

HermitianObservable::HermitianObservable(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw ContractViolation("HermitianObservable: matrix must be square and non-empty");
  }
  if (!linalg::is_hermitian(entries, kOperatorTol)) {
    throw ContractViolation("HermitianObservable: matrix is not Hermitian");
  }
  entries_ = 0.5 * (entries + entries.adjoint());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(entries_);
  const RealVector& values = solver.eigenvalues();
  const Matrix& vectors = solver.eigenvectors();
  Eigen::Index start = 0;
  while (start < values.size()) {
    Eigen::Index end = start + 1;
    while (end < values.size() &&
           values(end) - values(end - 1) < kDegeneracyTol * (1.0 + std::abs(values(end - 1)))) {
      ++end;
    }
    const auto block = vectors.middleCols(start, end - start);
    clusters_.push_back({values.segment(start, end - start).mean(), block * block.adjoint(),
                         static_cast<int>(end - start)});
    start = end;
  }
}

HermitianObservable HermitianObservable::diagonal_in(const Matrix& basis,
                                                     const std::vector<double>& values) {
  if (basis.cols() != static_cast<Eigen::Index>(values.size()) || basis.rows() != basis.cols()) {
    throw ContractViolation("HermitianObservable::diagonal_in: basis/value size mismatch");
  }
  if (!linalg::is_unitary(basis, kOperatorTol)) {
    throw ContractViolation("HermitianObservable::diagonal_in: basis is not orthonormal");
  }
  RealVector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return HermitianObservable(basis * v.cast<Complex>().asDiagonal() * basis.adjoint());
}

PovmSet::PovmSet(std::vector<Matrix> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw ContractViolation("PovmSet: no elements");
  const auto dim = elements_.front().rows();
  Matrix sum = Matrix::Zero(dim, dim);
  for (auto& e : elements_) {
    if (e.rows() != dim || e.cols() != dim) throw ContractViolation("PovmSet: element size mismatch");
    if (!linalg::is_hermitian(e, kOperatorTol)) {
      throw ContractViolation("PovmSet: element is not Hermitian");
    }
    e = 0.5 * (e + e.adjoint());
    if (linalg::hermitian_eigenvalues(e)(0) < -kOperatorTol) {
      throw ContractViolation("PovmSet: element is not positive semi-definite");
    }
    sum += e;
  }
  if (linalg::max_abs(sum - Matrix::Identity(dim, dim)) > kOperatorTol) {
    throw ContractViolation("PovmSet: elements do not sum to the identity");
  }
}

PovmSet PovmSet::from_observable(const HermitianObservable& observable) {
  std::vector<Matrix> elements;
  for (const auto& c : observable.clusters()) elements.push_back(c.projector);
  return PovmSet(std::move(elements));
}

std::vector<double> born_probabilities(const DensityMatrix& rho, const PovmSet& povm) {
  if (rho.dim() != povm.dim()) {
    throw ContractViolation("born_probabilities: POVM dimension " + std::to_string(povm.dim()) +
                            " does not match state dimension " + std::to_string(rho.dim()));
  }
  std::vector<double> probs;
  probs.reserve(povm.size());
  for (const auto& e : povm.elements()) {
    double p = (e * rho.matrix()).trace().real();
    if (p < 0.0 && p >= -kProbabilityClamp) p = 0.0;
    probs.push_back(p);
  }
  return probs;
}

std::vector<double> cluster_probabilities(const PureState& state,
                                          const HermitianObservable& observable,
                                          const Subsystems& on) {
  const SubsystemSplit split(state.space(), on);
  if (split.kept_dim() != observable.dim()) {
    throw ContractViolation("measurement: observable dimension does not match the measured factors");
  }
  const Matrix block = split.reshape(state.amplitudes());
  std::vector<double> probs;
  for (const auto& c : observable.clusters()) probs.push_back((c.projector * block).squaredNorm());
  return probs;
}

MeasurementResult measure_projective(const PureState& state,
                                     const HermitianObservable& observable,
                                     const Subsystems& on, RandomStream& rng) {
  const std::vector<double> probs = cluster_probabilities(state, observable, on);
  const std::size_t i = rng.categorical(probs);
  const SubsystemSplit split(state.space(), on);
  const Matrix projected = observable.clusters()[i].projector * split.reshape(state.amplitudes());
  return {i, probs[i], PureState::normalized(state.space(), split.flatten(projected))};
}

PovmSet random_povm(int dim, std::size_t count, RandomStream& rng) {
  std::vector<Matrix> g;
  Matrix sum = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < count; ++i) {
    Matrix x(dim, dim);
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) x(r, c) = Complex(rng.normal(), rng.normal());
    }
    g.push_back(x * x.adjoint());
    sum += g.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sum);
  const RealVector inv_root = solver.eigenvalues().cwiseSqrt().cwiseInverse();
  const Matrix s = solver.eigenvectors() * inv_root.cast<Complex>().asDiagonal() *
                   solver.eigenvectors().adjoint();
  for (auto& e : g) e = s * e * s;
  return PovmSet(std::move(g));
}

HermitianObservable random_observable(int dim, RandomStream& rng) {
  Matrix x(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) x(r, c) = Complex(rng.normal(), rng.normal());
  }
  return HermitianObservable(0.5 * (x + x.adjoint()));
}

}  // namespace pqsim
