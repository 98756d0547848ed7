#include "pqsim/opf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/measurement.hpp"
#include "pqsim/random.hpp"

namespace pqsim {

namespace {

constexpr double kWeightTol = 1e-9;
constexpr double kUnitaryTol = 1e-9;
constexpr double kQuadraticResidual = 1e-6;
constexpr double kFeasibleResidual = 1e-8;
constexpr double kUpdateViolation = 0.1;
constexpr std::size_t kMaxFiniteList = 64;

Opf weighted_sum(std::span<const Opf> opfs, std::span<const double> weights, OpfOrigin origin,
                 std::string description) {
  if (opfs.empty() || opfs.size() != weights.size()) {
    throw ContractViolation("OPF combination: need one weight per OPF");
  }
  const FactorSpace& space = opfs.front().space();
  std::optional<Matrix> op = Matrix::Zero(space.total_dim(), space.total_dim()).eval();
  for (std::size_t i = 0; i < opfs.size(); ++i) {
    if (!(opfs[i].space() == space)) throw ContractViolation("OPF combination: space mismatch");
    if (!(weights[i] >= 0.0)) throw ContractViolation("OPF combination: negative weight");
    if (op && opfs[i].quantum_operator()) {
      *op += weights[i] * *opfs[i].quantum_operator();
    } else {
      op.reset();
    }
  }
  std::vector<Opf> parts(opfs.begin(), opfs.end());
  std::vector<double> w(weights.begin(), weights.end());
  auto eval = [parts = std::move(parts), w = std::move(w)](const PureState& psi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) acc += w[i] * parts[i](psi);
    return acc;
  };
  return Opf(space, std::move(eval), origin, std::move(description), std::move(op));
}

void require_povm_element(const Matrix& q, const char* what) {
  if (!linalg::is_hermitian(q, 1e-9)) throw ContractViolation(std::string(what) + ": not Hermitian");
  const RealVector eig = linalg::hermitian_eigenvalues(0.5 * (q + q.adjoint()));
  if (eig(0) < -1e-9 || eig(eig.size() - 1) > 1.0 + 1e-9) {
    throw ContractViolation(std::string(what) + ": element must satisfy 0 <= Q <= I");
  }
}

/// |j>, (|j>+|k>)/sqrt2, (|j>+i|k>)/sqrt2: d^2 states whose projectors span
/// the Hermitian matrices.
std::vector<Vector> tomographic_vectors(int dim) {
  std::vector<Vector> out;
  const double s = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < dim; ++j) {
    Vector v = Vector::Zero(dim);
    v(j) = 1.0;
    out.push_back(v);
  }
  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      Vector plus = Vector::Zero(dim);
      plus(j) = s;
      plus(k) = s;
      out.push_back(plus);
      Vector plus_i = Vector::Zero(dim);
      plus_i(j) = s;
      plus_i(k) = Complex(0.0, s);
      out.push_back(plus_i);
    }
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Density matrix whose Hermitian coordinates reproduce the given outcome
/// values together with unit trace.
Matrix reconstruct_density(const std::vector<Matrix>& elements, const std::vector<double>& values,
                           int dim) {
  const int n = dim * dim;
  RealMatrix rows(static_cast<Eigen::Index>(elements.size()) + 1, n);
  RealVector rhs(rows.rows());
  for (std::size_t k = 0; k < elements.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) = linalg::hermitian_coordinates(elements[k]).transpose();
    rhs(static_cast<Eigen::Index>(k)) = values[k];
  }
  rows.row(rows.rows() - 1) = linalg::hermitian_coordinates(Matrix::Identity(dim, dim)).transpose();
  rhs(rhs.size() - 1) = 1.0;
  const RealVector coords = rows.colPivHouseholderQr().solve(rhs);
  return linalg::from_hermitian_coordinates(coords, dim);
}

Ensemble random_ensemble(const FactorSpace& space, RandomStream& rng) {
  const std::size_t n = 1 + static_cast<std::size_t>(rng.next_u64() % 4);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = 0.05 + rng.uniform();
    total += x;
  }
  std::vector<EnsembleMember> members;
  for (std::size_t i = 0; i < n; ++i) members.push_back({random_state(space, rng), w[i] / total});
  return Ensemble(std::move(members));
}

Ensemble uniform_ensemble(const FactorSpace& space, const Matrix& basis) {
  std::vector<EnsembleMember> members;
  const double p = 1.0 / static_cast<double>(basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    members.push_back({PureState::normalized(space, basis.col(j)), p});
  }
  return Ensemble(std::move(members));
}

Matrix fourier_matrix(int dim) {
  Matrix f(dim, dim);
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      f(j, k) = std::polar(norm, 2.0 * std::numbers::pi * j * k / dim);
    }
  }
  return f;
}

}  // namespace

std::string_view origin_name(OpfOrigin origin) {
  switch (origin) {
    case OpfOrigin::DeviceOutcome: return "device_outcome";
    case OpfOrigin::QuantumElement: return "quantum_element";
    case OpfOrigin::Mixture: return "mixture";
    case OpfOrigin::UnitaryComposed: return "unitary_composed";
    case OpfOrigin::SystemComposed: return "system_composed";
    case OpfOrigin::Custom: return "custom";
  }
  return "unknown";
}

Opf::Opf(FactorSpace space, Evaluator evaluator, OpfOrigin origin, std::string description,
         std::optional<Matrix> quantum_operator)
    : space_(std::move(space)),
      evaluator_(std::make_shared<const Evaluator>(std::move(evaluator))),
      origin_(origin),
      description_(std::move(description)),
      quantum_operator_(std::move(quantum_operator)) {}

double Opf::operator()(const PureState& state) const {
  if (!(state.space() == space_)) throw ContractViolation("OPF evaluated on a state of another space");
  return (*evaluator_)(state);
}

double Opf::operator()(const Ensemble& ensemble) const {
  double acc = 0.0;
  for (const auto& m : ensemble.members()) acc += m.weight * (*this)(m.state);
  return acc;
}

Opf constant_opf(FactorSpace space, double value) {
  const int d = space.total_dim();
  return Opf(std::move(space), [value](const PureState&) { return value; }, OpfOrigin::Custom,
             "constant", Matrix(value * Matrix::Identity(d, d)));
}

Opf opf_from_quantum(FactorSpace space, const Matrix& element) {
  if (element.rows() != space.total_dim()) {
    throw ContractViolation("opf_from_quantum: element dimension does not match the space");
  }
  require_povm_element(element, "opf_from_quantum");
  const Matrix q = 0.5 * (element + element.adjoint());
  auto eval = [q](const PureState& psi) {
    return psi.amplitudes().dot(q * psi.amplitudes()).real();
  };
  return Opf(std::move(space), std::move(eval), OpfOrigin::QuantumElement, "quantum element", q);
}

Opf opf_from_device(DeviceSpec spec, FactorSpace space, Subsystems target, Outcome selector) {
  target = normalize_subsystems(space, std::move(target));
  validate(spec, space, target);
  int target_dim = 1;
  for (std::size_t f : target) target_dim *= space.dim(f);
  if (!in_outcome_set(spec, target_dim, selector)) {
    throw ContractViolation("opf_from_device: selector " + to_string(selector) +
                            " is not an outcome of " + std::string(kind_name(kind_of(spec))));
  }
  std::string description = std::string(kind_name(kind_of(spec))) + " -> " + to_string(selector);
  auto eval = [spec = std::move(spec), target, selector](const PureState& psi) {
    double p = 0.0;
    for (const auto& [outcome, prob] : outcome_distribution(spec, psi, target)) {
      if (outcomes_match(outcome, selector)) p += prob;
    }
    return p;
  };
  return Opf(std::move(space), std::move(eval), OpfOrigin::DeviceOutcome, std::move(description));
}

Opf readout_opf(const PureState& phi) {
  const FactorSpace& space = phi.space();
  return opf_from_device(ReadoutSpec{}, space, space.all(),
                         MatrixDescription{phi.projector(), std::nullopt});
}

Opf mix(std::span<const Opf> opfs, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > kWeightTol) {
    throw ContractViolation("mix: weights sum to " + std::to_string(total));
  }
  return weighted_sum(opfs, weights, OpfOrigin::Mixture, "mixture");
}

Opf compose_unitary(const Opf& f, const Matrix& unitary) {
  if (unitary.rows() != f.space().total_dim() || !linalg::is_unitary(unitary, kUnitaryTol)) {
    throw ContractViolation("compose_unitary: matrix is not a unitary on the OPF's space");
  }
  std::optional<Matrix> op;
  if (f.quantum_operator()) op = unitary.adjoint() * *f.quantum_operator() * unitary;
  auto eval = [f, unitary](const PureState& psi) {
    return f(PureState::normalized(psi.space(), unitary * psi.amplitudes()));
  };
  return Opf(f.space(), std::move(eval), OpfOrigin::UnitaryComposed, "(" + f.description() + ") o U",
             std::move(op));
}

Opf compose_system(const Opf& g, const PureState& background) {
  const auto& gd = g.space().dims();
  const auto& bd = background.space().dims();
  if (gd.size() <= bd.size() || !std::equal(bd.rbegin(), bd.rend(), gd.rbegin())) {
    throw ContractViolation("compose_system: background space is not a trailing factor of g's space");
  }
  const FactorSpace space(std::vector<int>(gd.begin(), gd.end() - static_cast<std::ptrdiff_t>(bd.size())));
  std::optional<Matrix> op;
  if (g.quantum_operator()) {
    // (I (x) <phi|) Q (I (x) |phi>)
    const int d = space.total_dim();
    const int b = background.dim();
    Matrix embed = Matrix::Zero(d * b, d);
    for (int i = 0; i < d; ++i) embed.block(i * b, i, b, 1) = background.amplitudes();
    op = embed.adjoint() * *g.quantum_operator() * embed;
  }
  auto eval = [g, background](const PureState& psi) { return g(tensor_product(psi, background)); };
  return Opf(space, std::move(eval), OpfOrigin::SystemComposed,
             "(" + g.description() + ") on psi (x) phi", std::move(op));
}

double FullMeasurement::completeness_violation(const PureState& state) const {
  double total = 0.0;
  for (const auto& f : outcomes) total += f(state);
  return std::abs(total - 1.0);
}

FullMeasurement quantum_measurement(const FactorSpace& space, const PovmSet& povm) {
  FullMeasurement m;
  for (const auto& e : povm.elements()) m.outcomes.push_back(opf_from_quantum(space, e));
  return m;
}

FullMeasurement device_measurement(const DeviceSpec& spec, const FactorSpace& space,
                                   const Subsystems& target, const std::vector<Outcome>& outcomes) {
  FullMeasurement m;
  for (const auto& o : outcomes) m.outcomes.push_back(opf_from_device(spec, space, target, o));
  return m;
}

FullMeasurement mix_measurements(std::span<const FullMeasurement> measurements,
                                 std::span<const double> weights,
                                 const std::vector<std::vector<std::size_t>>& relabel) {
  if (measurements.empty() || measurements.size() != weights.size() ||
      relabel.size() != measurements.size()) {
    throw ContractViolation("mix_measurements: need one weight and one relabel map per measurement");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > kWeightTol) throw ContractViolation("mix_measurements: weights do not sum to 1");

  std::size_t labels = 0;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    if (relabel[k].size() != measurements[k].outcomes.size()) {
      throw ContractViolation("mix_measurements: relabel map does not cover every outcome");
    }
    for (std::size_t l : relabel[k]) labels = std::max(labels, l + 1);
  }
  FullMeasurement out;
  const FactorSpace& space = measurements.front().space();
  for (std::size_t label = 0; label < labels; ++label) {
    std::vector<Opf> parts;
    std::vector<double> w;
    for (std::size_t k = 0; k < measurements.size(); ++k) {
      for (std::size_t i = 0; i < relabel[k].size(); ++i) {
        if (relabel[k][i] == label) {
          parts.push_back(measurements[k].outcomes[i]);
          w.push_back(weights[k]);
        }
      }
    }
    if (parts.empty()) {
      out.outcomes.push_back(constant_opf(space, 0.0));
    } else {
      out.outcomes.push_back(weighted_sum(parts, w, OpfOrigin::Mixture, "mixed outcome " + std::to_string(label)));
    }
  }
  return out;
}

std::vector<double> fpvnem_outcomes(int dim, int precision) {
  const double top = quantize(std::log2(static_cast<double>(dim)), precision);
  const auto steps = static_cast<long long>(std::ldexp(top, precision));
  std::vector<double> values;
  for (long long k = 0; k <= steps; ++k) values.push_back(std::ldexp(static_cast<double>(k), -precision));
  return values;
}

MeasurementFamily quantum_povm_family(int dim, int background_dim, std::size_t count,
                                      RandomStream& rng) {
  MeasurementFamily fam{"quantum_povm", FactorSpace({dim}), {}, FactorSpace({background_dim}), {}};
  const FactorSpace joint({dim, background_dim});
  for (std::size_t i = 0; i < count; ++i) {
    fam.members.push_back(quantum_measurement(fam.space, random_povm(dim, 2 + i % 3, rng)));
    fam.extended.push_back(quantum_measurement(joint, random_povm(dim * background_dim, 2 + i % 3, rng)));
  }
  return fam;
}

MeasurementFamily fpvnem_family(int dim, int precision, int background_dim) {
  const EntropyMeterSpec spec{1.0, precision};
  std::vector<Outcome> outcomes;
  for (double v : fpvnem_outcomes(dim, precision)) outcomes.emplace_back(RealValue{v});
  MeasurementFamily fam{"fpvnem", FactorSpace({dim}), {}, FactorSpace({background_dim}), {}};
  fam.members.push_back(device_measurement(spec, fam.space, {0}, outcomes));
  fam.extended.push_back(device_measurement(spec, FactorSpace({dim, background_dim}), {0}, outcomes));
  return fam;
}

double ClosureReport::max_violation() const {
  return std::max({completeness, mixture, unitary, system, range, operator_membership});
}

ClosureReport check_closure(const MeasurementFamily& family, std::size_t samples, RandomStream& rng) {
  if (family.members.empty()) throw ContractViolation("check_closure: family has no members");
  ClosureReport report;
  report.samples = samples;

  auto range_of = [&](const FullMeasurement& m, const PureState& psi) {
    double v = 0.0;
    for (const auto& f : m.outcomes) {
      const double x = f(psi);
      v = std::max({v, -x, x - 1.0});
      if (const auto& q = f.quantum_operator()) {
        const RealVector eig = linalg::hermitian_eigenvalues(*q);
        report.operator_membership =
            std::max({report.operator_membership, -eig(0), eig(eig.size() - 1) - 1.0});
      }
    }
    report.range = std::max(report.range, v);
  };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.next_u64() % n); };

  for (std::size_t s = 0; s < samples; ++s) {
    const PureState psi = random_state(family.space, rng);

    const FullMeasurement& m = family.members[pick(family.members.size())];
    report.completeness = std::max(report.completeness, m.completeness_violation(psi));
    range_of(m, psi);

    // Mixture of two members with outcomes identified by index.
    const FullMeasurement& a = family.members[pick(family.members.size())];
    const FullMeasurement& b = family.members[pick(family.members.size())];
    const double w = rng.uniform();
    std::vector<std::vector<std::size_t>> relabel(2);
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) relabel[0].push_back(i);
    for (std::size_t i = 0; i < b.outcomes.size(); ++i) relabel[1].push_back(i);
    const FullMeasurement pair[] = {a, b};
    const double weights[] = {w, 1.0 - w};
    const FullMeasurement mixed = mix_measurements(pair, weights, relabel);
    report.mixture = std::max(report.mixture, mixed.completeness_violation(psi));
    range_of(mixed, psi);

    const Matrix u = linalg::random_unitary(family.space.total_dim(), rng);
    FullMeasurement rotated;
    for (const auto& f : m.outcomes) rotated.outcomes.push_back(compose_unitary(f, u));
    report.unitary = std::max(report.unitary, rotated.completeness_violation(psi));
    range_of(rotated, psi);

    if (family.background && !family.extended.empty()) {
      const PureState phi = random_state(*family.background, rng);
      FullMeasurement reduced;
      for (const auto& g : family.extended[pick(family.extended.size())].outcomes) {
        reduced.outcomes.push_back(compose_system(g, phi));
      }
      report.system = std::max(report.system, reduced.completeness_violation(psi));
      range_of(reduced, psi);
    }
  }
  return report;
}

ProductFormCertificate product_form_witness(const Opf& f, RandomStream& rng,
                                            const ProductFormOptions& options) {
  const FactorSpace& space = f.space();
  if (space.size() != 2 || space.total_dim() > 16) {
    throw ContractViolation("product_form_witness: needs a bipartite space with a*b <= 16");
  }
  const int a = space.dim(0);
  const int b = space.dim(1);
  const int dim = space.total_dim();

  std::vector<Vector> probes;
  for (const Vector& x : tomographic_vectors(a)) {
    for (const Vector& y : tomographic_vectors(b)) probes.push_back(kron(x, y));
  }
  if (options.probes == ProbeSet::Full) {
    for (const Vector& v : tomographic_vectors(dim)) probes.push_back(v);
  }
  for (std::size_t i = 0; i < options.random_probes; ++i) {
    if (options.probes == ProbeSet::Full) {
      probes.push_back(linalg::random_unit_vector(dim, rng));
    } else {
      probes.push_back(kron(linalg::random_unit_vector(a, rng), linalg::random_unit_vector(b, rng)));
    }
  }

  const int params = dim * dim;
  RealMatrix design(static_cast<Eigen::Index>(probes.size()), params);
  RealVector values(design.rows());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    design.row(row) = linalg::hermitian_coordinates(linalg::outer(probes[i])).transpose();
    values(row) = f(PureState::normalized(space, probes[i]));
  }
  const RealVector coords = design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(values);

  ProductFormCertificate cert;
  cert.residual = (design * coords - values).cwiseAbs().maxCoeff();
  cert.fitted_operator = linalg::from_hermitian_coordinates(coords, dim);
  cert.probe_count = probes.size();
  cert.quadratic = cert.residual < kQuadraticResidual;
  cert.violation = cert.residual >= options.violation_threshold;
  return cert;
}

std::string_view family_name(EstimationFamily family) {
  switch (family) {
    case EstimationFamily::QuantumPovm: return "quantum_povm";
    case EstimationFamily::EntropyMeter: return "entropy_meter";
    case EstimationFamily::Spod: return "spod";
    case EstimationFamily::ErdSevrd: return "erd_sevrd";
    case EstimationFamily::Readout: return "readout";
  }
  return "unknown";
}

EstimationFamily parse_family(std::string_view id) {
  for (auto f : {EstimationFamily::QuantumPovm, EstimationFamily::EntropyMeter, EstimationFamily::Spod,
                 EstimationFamily::ErdSevrd, EstimationFamily::Readout}) {
    if (family_name(f) == id) return f;
  }
  throw ContractViolation("unknown estimation family id '" + std::string(id) + "'");
}

std::string_view verdict_name(EstimationVerdict verdict) {
  switch (verdict) {
    case EstimationVerdict::Satisfied: return "SATISFIED";
    case EstimationVerdict::SatisfiedTrivially: return "SATISFIED-TRIVIALLY";
    case EstimationVerdict::Fails: return "FAILS";
  }
  return "UNKNOWN";
}

std::vector<Matrix> informationally_complete_projectors(int dim) {
  std::vector<Matrix> out;
  const auto vecs = tomographic_vectors(dim);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    if (i == static_cast<std::size_t>(dim - 1)) continue;  // |d-1> follows from the trace
    out.push_back(linalg::outer(vecs[i]));
  }
  return out;
}

EstimationReportCard check_estimation_assumption(EstimationFamily family, int dim,
                                                 RandomStream& rng, std::span<const Opf> finite_list) {
  if (dim < 2 || dim > 4) throw ContractViolation("check_estimation_assumption: needs 2 <= d <= 4");
  if (finite_list.size() > kMaxFiniteList) {
    throw ContractViolation("check_estimation_assumption: finite list exceeds 64 outcomes");
  }
  const FactorSpace space({dim});
  const Subsystems whole{0};
  const std::vector<Matrix> ic = informationally_complete_projectors(dim);
  const Matrix identity = Matrix::Identity(dim, dim);

  EstimationReportCard card{family, EstimationVerdict::Satisfied, {}, 0.0, std::nullopt};
  for (const Matrix& p : ic) {
    switch (family) {
      case EstimationFamily::Spod:
        card.outcomes.push_back(
            opf_from_device(PovmSamplerSpec{PovmSet({p, identity - p}), std::nullopt}, space, whole,
                            IntegerLabel{1}));
        break;
      case EstimationFamily::ErdSevrd:
        card.outcomes.push_back(opf_from_device(
            EigenvalueSamplerSpec{HermitianObservable(p), EigenvalueVariant::Value, std::nullopt, 0},
            space, whole, RealValue{1.0}));
        break;
      default:
        card.outcomes.push_back(opf_from_quantum(space, p));
        break;
    }
  }

  // The listed values (with unit trace) must pin down the density matrix.
  {
    RealMatrix rows(static_cast<Eigen::Index>(ic.size()) + 1, dim * dim);
    for (std::size_t k = 0; k < ic.size(); ++k) {
      rows.row(static_cast<Eigen::Index>(k)) = linalg::hermitian_coordinates(ic[k]).transpose();
    }
    rows.row(rows.rows() - 1) = linalg::hermitian_coordinates(identity).transpose();
    if (Eigen::FullPivLU<RealMatrix>(rows).rank() != dim * dim) {
      card.verdict = EstimationVerdict::Fails;
      card.max_deviation = 1.0;
      return card;
    }
  }

  constexpr int kTrials = 40;
  switch (family) {
    case EstimationFamily::QuantumPovm:
    case EstimationFamily::Spod:
    case EstimationFamily::ErdSevrd: {
      for (int t = 0; t < kTrials; ++t) {
        const Ensemble e = random_ensemble(space, rng);
        std::vector<double> values;
        for (const Opf& f : card.outcomes) values.push_back(f(e));
        const Matrix rho = reconstruct_density(ic, values, dim);
        const Matrix truth = e.density_matrix().matrix();
        card.max_deviation = std::max(card.max_deviation, linalg::max_abs(rho - truth));

        // Any other family OPF is then fixed by the reconstruction.
        if (family == EstimationFamily::ErdSevrd) {
          const HermitianObservable obs = random_observable(dim, rng);
          for (std::size_t c = 0; c < obs.clusters().size(); ++c) {
            const Opf g = opf_from_device(
                EigenvalueSamplerSpec{obs, EigenvalueVariant::IntegerLabel, std::nullopt, 0}, space,
                whole, IntegerLabel{static_cast<std::int64_t>(c)});
            const double predicted = (obs.clusters()[c].projector * rho).trace().real();
            card.max_deviation = std::max(card.max_deviation, std::abs(g(e) - predicted));
          }
          double ensemble_mean = 0.0;
          for (const auto& m : e.members()) {
            ensemble_mean += m.weight * expectation_readout(m.state, whole, {obs, std::nullopt}).value;
          }
          card.max_deviation = std::max(
              card.max_deviation, std::abs(ensemble_mean - (obs.matrix() * rho).trace().real()));
        } else {
          const PovmSet povm = random_povm(dim, 3, rng);
          for (std::size_t i = 0; i < povm.size(); ++i) {
            const Opf g = family == EstimationFamily::Spod
                              ? opf_from_device(PovmSamplerSpec{povm, std::nullopt}, space, whole,
                                                IntegerLabel{static_cast<std::int64_t>(i + 1)})
                              : opf_from_quantum(space, povm.elements()[i]);
            const double predicted = (povm.elements()[i] * rho).trace().real();
            card.max_deviation = std::max(card.max_deviation, std::abs(g(e) - predicted));
          }
        }
      }
      card.verdict = card.max_deviation < 1e-8 ? EstimationVerdict::Satisfied : EstimationVerdict::Fails;
      return card;
    }

    case EstimationFamily::EntropyMeter: {
      // Every meter OPF is constant on pure states of a single system, hence
      // on ensembles: outcome 0 has probability 1, every other value 0.
      for (double alpha : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        for (int m = 1; m <= 8; ++m) {
          const EntropyMeterSpec spec{alpha, m};
          const Opf zero = opf_from_device(spec, space, whole, RealValue{0.0});
          const Opf step = opf_from_device(spec, space, whole, RealValue{std::ldexp(1.0, -m)});
          for (int t = 0; t < 4; ++t) {
            const Ensemble e = random_ensemble(space, rng);
            card.max_deviation = std::max({card.max_deviation, std::abs(zero(e) - 1.0), std::abs(step(e))});
          }
        }
      }
      card.verdict = card.max_deviation < 1e-12 ? EstimationVerdict::SatisfiedTrivially
                                                : EstimationVerdict::Fails;
      return card;
    }

    case EstimationFamily::Readout: {
      // Two equal-weight bases of the same maximally mixed state. The
      // readout OPF of the first basis vector separates them, while every
      // OPF on the finite list must agree on both.
      std::vector<Opf> list = card.outcomes;
      list.insert(list.end(), finite_list.begin(), finite_list.end());
      card.outcomes = list;
      const Matrix fourier = fourier_matrix(dim);
      for (std::size_t attempt = 0; attempt <= kMaxFiniteList; ++attempt) {
        const Matrix u = attempt == 0 ? Matrix(identity) : linalg::random_unitary(dim, rng);
        const Ensemble first = uniform_ensemble(space, u);
        const Ensemble second = uniform_ensemble(space, u * fourier);
        double disagreement = 0.0;
        for (const Opf& f : list) disagreement = std::max(disagreement, std::abs(f(first) - f(second)));
        if (disagreement > 1e-12) continue;
        Opf separator = readout_opf(first.members().front().state);
        const double v1 = separator(first);
        const double v2 = separator(second);
        if (std::abs(v1 - v2) < 1e-9) continue;
        const double dist = linalg::max_abs(first.density_matrix().matrix() - second.density_matrix().matrix());
        card.witness = EstimationWitness{first, second, std::move(separator), v1, v2, dist, disagreement};
        card.verdict = EstimationVerdict::Fails;
        return card;
      }
      throw ContractViolation("check_estimation_assumption: no witness found for the supplied list");
    }
  }
  return card;
}

Matrix CPMapCandidate::apply(const Matrix& h) const {
  return linalg::from_hermitian_coordinates(action * linalg::hermitian_coordinates(h), dim);
}

UpdateMapCertificate update_map_feasibility(const Matrix& element, std::span<const PureState> probes) {
  const int dim = static_cast<int>(element.rows());
  require_povm_element(element, "update_map_feasibility");
  if (probes.empty()) throw ContractViolation("update_map_feasibility: no probe states");
  for (const auto& p : probes) {
    if (p.dim() != dim) throw ContractViolation("update_map_feasibility: probe dimension mismatch");
  }

  std::vector<Vector> constraints;
  for (const auto& p : probes) constraints.push_back(p.amplitudes());
  {
    RealMatrix span(dim * dim, static_cast<Eigen::Index>(probes.size()));
    for (std::size_t i = 0; i < probes.size(); ++i) {
      span.col(static_cast<Eigen::Index>(i)) = linalg::hermitian_coordinates(probes[i].projector());
    }
    Eigen::ColPivHouseholderQR<RealMatrix> qr(span);
    qr.setThreshold(1e-9);
    if (qr.rank() != dim * dim) {
      throw ContractViolation("update_map_feasibility: probe states do not span the Hermitian operators");
    }
  }
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      for (double sign : {1.0, -1.0}) {
        const Vector v = probes[i].amplitudes() + sign * probes[j].amplitudes();
        if (v.norm() > 1e-6) constraints.push_back(v / v.norm());
      }
    }
  }

  const int n = dim * dim;
  const auto count = static_cast<Eigen::Index>(constraints.size());
  RealMatrix inputs(count, n);
  RealMatrix targets(count, n);
  for (Eigen::Index c = 0; c < count; ++c) {
    const Vector& phi = constraints[static_cast<std::size_t>(c)];
    const RealVector x = linalg::hermitian_coordinates(linalg::outer(phi));
    const double weight = phi.dot(element * phi).real();
    inputs.row(c) = x.transpose();
    targets.row(c) = weight * x.transpose();
  }
  // inputs * L^T = targets in the least-squares sense.
  const RealMatrix lt = inputs.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(targets);

  UpdateMapCertificate cert;
  cert.map = CPMapCandidate{dim, lt.transpose()};
  cert.constraint_count = constraints.size();
  cert.residual = (inputs * lt - targets).rowwise().norm().maxCoeff();
  cert.feasible = cert.residual < kFeasibleResidual;
  cert.violation = cert.residual >= kUpdateViolation;
  return cert;
}

}  // namespace pqsim
