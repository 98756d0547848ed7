#include "pqsim/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pqsim/error.hpp"
#include "pqsim/random.hpp"

namespace pqsim {

namespace {

constexpr double kStateTol = 1e-9;
constexpr double kSchmidtFloor = 1e-14;

}  // namespace

FactorSpace::FactorSpace(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ContractViolation("FactorSpace: at least one factor required");
  for (int d : dims_) {
    if (d < 2) {
      throw ContractViolation("FactorSpace: factor dimension " + std::to_string(d) + " < 2");
    }
    total_dim_ *= d;
  }
}

FactorSpace FactorSpace::subspace(const Subsystems& factors) const {
  std::vector<int> dims;
  for (std::size_t f : normalize_subsystems(*this, factors)) dims.push_back(dims_[f]);
  return FactorSpace(std::move(dims));
}

FactorSpace FactorSpace::tensor(const FactorSpace& other) const {
  std::vector<int> dims = dims_;
  dims.insert(dims.end(), other.dims_.begin(), other.dims_.end());
  return FactorSpace(std::move(dims));
}

Subsystems FactorSpace::all() const {
  Subsystems s(dims_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

Subsystems FactorSpace::complement(const Subsystems& factors) const {
  const Subsystems sorted = normalize_subsystems(*this, factors);
  Subsystems rest;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (!std::binary_search(sorted.begin(), sorted.end(), i)) rest.push_back(i);
  }
  return rest;
}

Subsystems normalize_subsystems(const FactorSpace& space, Subsystems factors) {
  if (factors.empty()) throw ContractViolation("subsystem set is empty");
  std::sort(factors.begin(), factors.end());
  if (std::adjacent_find(factors.begin(), factors.end()) != factors.end()) {
    throw ContractViolation("subsystem set has duplicate indices");
  }
  if (factors.back() >= space.size()) {
    throw ContractViolation("subsystem index " + std::to_string(factors.back()) +
                            " out of range for " + std::to_string(space.size()) + " factors");
  }
  return factors;
}

SubsystemSplit::SubsystemSplit(const FactorSpace& space, Subsystems keep)
    : kept_(normalize_subsystems(space, std::move(keep))) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!std::binary_search(kept_.begin(), kept_.end(), i)) rest_.push_back(i);
  }
  for (std::size_t f : kept_) kept_dim_ *= space.dim(f);
  for (std::size_t f : rest_) rest_dim_ *= space.dim(f);

  const int total = space.total_dim();
  kept_index_.resize(static_cast<std::size_t>(total));
  rest_index_.resize(static_cast<std::size_t>(total));
  std::vector<int> digits(space.size());
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (std::size_t f = space.size(); f-- > 0;) {
      digits[f] = rem % space.dim(f);
      rem /= space.dim(f);
    }
    int k = 0;
    for (std::size_t f : kept_) k = k * space.dim(f) + digits[f];
    int r = 0;
    for (std::size_t f : rest_) r = r * space.dim(f) + digits[f];
    kept_index_[static_cast<std::size_t>(flat)] = k;
    rest_index_[static_cast<std::size_t>(flat)] = r;
  }
}

Matrix SubsystemSplit::reshape(const Vector& amplitudes) const {
  Matrix block(kept_dim_, rest_dim_);
  for (Eigen::Index flat = 0; flat < amplitudes.size(); ++flat) {
    const auto f = static_cast<std::size_t>(flat);
    block(kept_index_[f], rest_index_[f]) = amplitudes(flat);
  }
  return block;
}

Vector SubsystemSplit::flatten(const Matrix& block) const {
  Vector amplitudes(static_cast<Eigen::Index>(kept_index_.size()));
  for (std::size_t f = 0; f < kept_index_.size(); ++f) {
    amplitudes(static_cast<Eigen::Index>(f)) = block(kept_index_[f], rest_index_[f]);
  }
  return amplitudes;
}

PureState::PureState(FactorSpace space, Vector amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != space_.total_dim()) {
    throw ContractViolation("PureState: " + std::to_string(amplitudes_.size()) +
                            " amplitudes for total dimension " +
                            std::to_string(space_.total_dim()));
  }
  const double norm = amplitudes_.norm();
  if (!(std::abs(norm - 1.0) <= kStateTol)) {
    throw ContractViolation("PureState: norm " + std::to_string(norm) + " is not 1");
  }
  amplitudes_ /= norm;
}

PureState PureState::normalized(FactorSpace space, Vector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ContractViolation("PureState: cannot normalize a zero vector");
  }
  return PureState(std::move(space), amplitudes / norm);
}

PureState PureState::basis(FactorSpace space, const std::vector<int>& labels) {
  if (labels.size() != space.size()) {
    throw ContractViolation("PureState::basis: label count does not match factor count");
  }
  int index = 0;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (labels[f] < 0 || labels[f] >= space.dim(f)) {
      throw ContractViolation("PureState::basis: label out of range");
    }
    index = index * space.dim(f) + labels[f];
  }
  Vector v = Vector::Zero(space.total_dim());
  v(index) = 1.0;
  return PureState(std::move(space), std::move(v));
}

bool PureState::same_ray(const PureState& other, double tol) const {
  return space_ == other.space_ && linalg::ray_distance(amplitudes_, other.amplitudes_) <= tol;
}

DensityMatrix::DensityMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw ContractViolation("DensityMatrix: matrix must be square and non-empty");
  }
  if (!linalg::is_hermitian(entries, kStateTol)) {
    throw ContractViolation("DensityMatrix: matrix is not Hermitian");
  }
  const Complex tr = entries.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > kStateTol) {
    throw ContractViolation("DensityMatrix: trace " + std::to_string(tr.real()) + " is not 1");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
  const double min_eig = linalg::hermitian_eigenvalues(entries_)(0);
  if (min_eig < -kStateTol) {
    throw ContractViolation("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& state) {
  return DensityMatrix(state.projector());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

Ensemble::Ensemble(std::vector<EnsembleMember> members) : members_(std::move(members)) {
  if (members_.empty()) throw ContractViolation("Ensemble: no members");
  double total = 0.0;
  for (const auto& m : members_) {
    if (!(m.weight > 0.0)) throw ContractViolation("Ensemble: weights must be positive");
    if (!(m.state.space() == members_.front().state.space())) {
      throw ContractViolation("Ensemble: members live in different spaces");
    }
    total += m.weight;
  }
  if (std::abs(total - 1.0) > kStateTol) {
    throw ContractViolation("Ensemble: weights sum to " + std::to_string(total));
  }
}

DensityMatrix Ensemble::density_matrix() const {
  const int dim = space().total_dim();
  Matrix rho = Matrix::Zero(dim, dim);
  for (const auto& m : members_) rho += m.weight * m.state.projector();
  return DensityMatrix(rho);
}

PureState SchmidtDecomposition::reconstruct() const {
  const SubsystemSplit split(space, cut);
  Matrix block = Matrix::Zero(split.kept_dim(), split.rest_dim());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    block += std::sqrt(weights[i]) * left_states[i].amplitudes() *
             right_states[i].amplitudes().transpose();
  }
  return PureState::normalized(space, split.flatten(block));
}

PureState tensor_product(const PureState& a, const PureState& b) {
  const Vector& x = a.amplitudes();
  const Vector& y = b.amplitudes();
  Vector out(x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
  return PureState::normalized(a.space().tensor(b.space()), std::move(out));
}

namespace {

void require_proper(const FactorSpace& space, const Subsystems& keep) {
  if (keep.size() >= space.size()) {
    throw ContractViolation("partial_trace: keep must be a proper subset of the factors");
  }
}

}  // namespace

DensityMatrix partial_trace(const PureState& state, Subsystems keep) {
  keep = normalize_subsystems(state.space(), std::move(keep));
  require_proper(state.space(), keep);
  return reduced_state(state, std::move(keep));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const FactorSpace& space, Subsystems keep) {
  if (rho.dim() != space.total_dim()) {
    throw ContractViolation("partial_trace: density matrix does not match the factor space");
  }
  keep = normalize_subsystems(space, std::move(keep));
  require_proper(space, keep);
  const SubsystemSplit split(space, keep);
  std::vector<std::vector<int>> flat_of(static_cast<std::size_t>(split.kept_dim()),
                                        std::vector<int>(static_cast<std::size_t>(split.rest_dim())));
  for (int f = 0; f < space.total_dim(); ++f) {
    const auto [k, r] = split.split(f);
    flat_of[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = f;
  }
  Matrix out = Matrix::Zero(split.kept_dim(), split.kept_dim());
  for (int a = 0; a < split.kept_dim(); ++a) {
    for (int b = 0; b < split.kept_dim(); ++b) {
      Complex acc = 0.0;
      for (int t = 0; t < split.rest_dim(); ++t) {
        acc += rho.matrix()(flat_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)],
                            flat_of[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)]);
      }
      out(a, b) = acc;
    }
  }
  return DensityMatrix(out);
}

DensityMatrix reduced_state(const PureState& state, Subsystems target) {
  const SubsystemSplit split(state.space(), std::move(target));
  const Matrix block = split.reshape(state.amplitudes());
  return DensityMatrix(block * block.adjoint());
}

SchmidtDecomposition schmidt_decompose(const PureState& state, Subsystems cut) {
  cut = normalize_subsystems(state.space(), std::move(cut));
  require_proper(state.space(), cut);
  const SubsystemSplit split(state.space(), cut);
  const Matrix block = split.reshape(state.amplitudes());
  Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SchmidtDecomposition out{state.space(), cut, {}, {}, {}};
  const FactorSpace left_space = state.space().subspace(split.kept());
  const FactorSpace right_space = state.space().subspace(split.rest());
  const RealVector& sv = svd.singularValues();
  double total = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double p = sv(i) * sv(i);
    if (p <= kSchmidtFloor) continue;
    out.weights.push_back(p);
    total += p;
    out.left_states.push_back(PureState::normalized(left_space, svd.matrixU().col(i)));
    out.right_states.push_back(PureState::normalized(right_space, svd.matrixV().col(i).conjugate()));
  }
  for (double& p : out.weights) p /= total;
  return out;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ContractViolation("fidelity: dimension mismatch");
  // Nuclear norm of sqrt(rho) sqrt(sigma): singular values carry no square-root
  // amplification of eigenvalue noise, unlike the eigenvalues of sqrt(rho) sigma sqrt(rho).
  const Matrix product = linalg::psd_sqrt(rho.matrix()) * linalg::psd_sqrt(sigma.matrix());
  const double tr = Eigen::JacobiSVD<Matrix>(product).singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ContractViolation("trace_distance: dimension mismatch");
  const RealVector eig = linalg::hermitian_eigenvalues(rho.matrix() - sigma.matrix());
  return 0.5 * eig.cwiseAbs().sum();
}

PureState random_state(const FactorSpace& space, RandomStream& rng) {
  return PureState::normalized(space, linalg::random_unit_vector(space.total_dim(), rng));
}

DensityMatrix random_density_matrix(int dim, RandomStream& rng) {
  const PureState purified = random_state(FactorSpace({dim, dim}), rng);
  return partial_trace(purified, {0});
}

PureState maximally_entangled(int dim) {
  Vector v = Vector::Zero(dim * dim);
  for (int j = 0; j < dim; ++j) v(j * dim + j) = 1.0;
  return PureState::normalized(FactorSpace({dim, dim}), std::move(v));
}

}  // namespace pqsim
