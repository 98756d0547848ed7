#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pqsim/linalg.hpp"

namespace pqsim {

class RandomStream;

/// Ordered subsystem indices (0-based). Functions taking a Subsystems value
/// normalize it to ascending order and reject duplicates.
using Subsystems = std::vector<std::size_t>;

/// Tensor factorization C^{d_1} (x) ... (x) C^{d_n}; every d_i >= 2.
/// Amplitude index order is row-major with factor 0 most significant.
class FactorSpace {
 public:
  explicit FactorSpace(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  int dim(std::size_t factor) const { return dims_.at(factor); }
  int total_dim() const { return total_dim_; }

  /// Space of the listed factors, in ascending order.
  FactorSpace subspace(const Subsystems& factors) const;

  /// Concatenation: this space followed by `other`.
  FactorSpace tensor(const FactorSpace& other) const;

  Subsystems all() const;
  Subsystems complement(const Subsystems& factors) const;

  bool operator==(const FactorSpace&) const = default;

 private:
  std::vector<int> dims_;
  int total_dim_ = 1;
};

/// Validates and sorts a subsystem set against a space. Throws on empty,
/// duplicate or out-of-range indices.
Subsystems normalize_subsystems(const FactorSpace& space, Subsystems factors);

/// Reshapes flat amplitudes into a (kept x rest) matrix for a bipartition of
/// the factors, and back. `keep` may cover every factor, in which case the
/// rest dimension is 1.
class SubsystemSplit {
 public:
  SubsystemSplit(const FactorSpace& space, Subsystems keep);

  const Subsystems& kept() const { return kept_; }
  const Subsystems& rest() const { return rest_; }
  int kept_dim() const { return kept_dim_; }
  int rest_dim() const { return rest_dim_; }

  Matrix reshape(const Vector& amplitudes) const;
  Vector flatten(const Matrix& block) const;

  /// (kept index, rest index) of a flat index.
  std::pair<int, int> split(int flat) const {
    const auto f = static_cast<std::size_t>(flat);
    return {kept_index_[f], rest_index_[f]};
  }

 private:
  Subsystems kept_;
  Subsystems rest_;
  int kept_dim_ = 1;
  int rest_dim_ = 1;
  std::vector<int> kept_index_;
  std::vector<int> rest_index_;
};

/// A ray in the factor space, stored as a unit vector.
class PureState {
 public:
  /// Requires norm within 1e-9 of one; the stored vector is renormalized.
  PureState(FactorSpace space, Vector amplitudes);

  /// Renormalizes any non-zero vector.
  static PureState normalized(FactorSpace space, Vector amplitudes);

  /// Product of computational basis states |l_1 ... l_n>.
  static PureState basis(FactorSpace space, const std::vector<int>& labels);

  const FactorSpace& space() const { return space_; }
  const Vector& amplitudes() const { return amplitudes_; }
  int dim() const { return space_.total_dim(); }

  Matrix projector() const { return linalg::outer(amplitudes_); }

  /// Phase-invariant comparison.
  bool same_ray(const PureState& other, double tol = 1e-9) const;

 private:
  FactorSpace space_;
  Vector amplitudes_;
};

/// Hermitian, positive semi-definite, unit-trace matrix.
class DensityMatrix {
 public:
  /// Checks hermiticity (1e-9 elementwise), unit trace (1e-9) and
  /// min eigenvalue >= -1e-9; stores the exactly hermitized matrix.
  explicit DensityMatrix(const Matrix& entries);

  static DensityMatrix from_pure(const PureState& state);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }

  /// Ascending.
  RealVector eigenvalues() const { return linalg::hermitian_eigenvalues(entries_); }

 private:
  Matrix entries_;
};

struct EnsembleMember {
  PureState state;
  double weight;
};

/// A proper mixture: finitely many pure states with positive weights.
class Ensemble {
 public:
  explicit Ensemble(std::vector<EnsembleMember> members);

  const std::vector<EnsembleMember>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const FactorSpace& space() const { return members_.front().state.space(); }

  /// sum_r p_r |psi_r><psi_r|
  DensityMatrix density_matrix() const;

 private:
  std::vector<EnsembleMember> members_;
};

struct SchmidtDecomposition {
  FactorSpace space;
  Subsystems cut;
  std::vector<double> weights;           // descending, all > 0
  std::vector<PureState> left_states;    // on space.subspace(cut)
  std::vector<PureState> right_states;   // on the complement

  std::size_t rank() const { return weights.size(); }

  /// sum_i sqrt(p_i) phi_i (x) chi_i, in the original factor order.
  PureState reconstruct() const;
};

PureState tensor_product(const PureState& a, const PureState& b);

/// Reduced density matrix on `keep`, which must be a nonempty proper subset.
DensityMatrix partial_trace(const PureState& state, Subsystems keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const FactorSpace& space, Subsystems keep);

/// Like partial_trace, but `target` may also cover every factor (then the
/// result is the projector onto the state).
DensityMatrix reduced_state(const PureState& state, Subsystems target);

SchmidtDecomposition schmidt_decompose(const PureState& state, Subsystems cut);

/// Tr(sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// (1/2) ||rho - sigma||_1
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

PureState random_state(const FactorSpace& space, RandomStream& rng);

/// Random mixed state: reduced state of a Haar-random purification.
DensityMatrix random_density_matrix(int dim, RandomStream& rng);

/// (|00..> + |11..> + ...)/sqrt(d) over two factors of equal dimension d.
PureState maximally_entangled(int dim);

}  // namespace pqsim
