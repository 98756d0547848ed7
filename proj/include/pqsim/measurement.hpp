#pragma once

#include <vector>

#include "pqsim/linalg.hpp"
#include "pqsim/state.hpp"

namespace pqsim {

class RandomStream;

/// Eigenvalue tolerance for clustering a spectrum into eigenspaces:
/// |lambda - lambda'| < kDegeneracyTol * (1 + |lambda|).
inline constexpr double kDegeneracyTol = 1e-9;

struct EigenCluster {
  double value;       // mean of the clustered eigenvalues
  Matrix projector;   // onto the eigenspace
  int multiplicity;
};

/// Hermitian operator with its spectral decomposition, clusters in ascending
/// eigenvalue order.
class HermitianObservable {
 public:
  explicit HermitianObservable(const Matrix& entries);

  /// sum_i values[i] |b_i><b_i| for the columns b_i of an orthonormal basis.
  static HermitianObservable diagonal_in(const Matrix& basis, const std::vector<double>& values);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  const std::vector<EigenCluster>& clusters() const { return clusters_; }

 private:
  Matrix entries_;
  std::vector<EigenCluster> clusters_;
};

/// Finite POVM: positive semi-definite elements summing to the identity.
class PovmSet {
 public:
  explicit PovmSet(std::vector<Matrix> elements);

  /// Projective POVM of an observable's eigenspaces, in cluster order.
  static PovmSet from_observable(const HermitianObservable& observable);

  const std::vector<Matrix>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  int dim() const { return static_cast<int>(elements_.front().rows()); }

 private:
  std::vector<Matrix> elements_;
};

/// Tr(A_i rho) for each element; entries in [-1e-12, 0) clamp to 0.
std::vector<double> born_probabilities(const DensityMatrix& rho, const PovmSet& povm);

struct MeasurementResult {
  std::size_t cluster;
  double probability;
  PureState post_state;
};

/// Probability of each eigenspace of `observable` acting on factors `on`.
std::vector<double> cluster_probabilities(const PureState& state,
                                          const HermitianObservable& observable,
                                          const Subsystems& on);

/// Projective measurement with the standard state update: samples an
/// eigenspace by its Born probability and returns the renormalized
/// projection of the state.
MeasurementResult measure_projective(const PureState& state,
                                     const HermitianObservable& observable,
                                     const Subsystems& on, RandomStream& rng);

/// Random full-rank POVM with `count` elements: G_i = X_i X_i^dagger for
/// Ginibre X_i, normalized by S^{-1/2} G_i S^{-1/2} with S = sum G_i.
PovmSet random_povm(int dim, std::size_t count, RandomStream& rng);

/// Random Hermitian matrix with Gaussian entries.
HermitianObservable random_observable(int dim, RandomStream& rng);

}  // namespace pqsim
