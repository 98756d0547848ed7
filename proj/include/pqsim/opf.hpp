#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pqsim/devices.hpp"
#include "pqsim/state.hpp"

namespace pqsim {

class RandomStream;

enum class OpfOrigin { DeviceOutcome, QuantumElement, Mixture, UnitaryComposed, SystemComposed, Custom };

std::string_view origin_name(OpfOrigin origin);

/// Outcome probability function: the probability of one outcome of one
/// measurement, as a function of the pure state it is applied to. Immutable
/// and cheap to copy.
class Opf {
 public:
  using Evaluator = std::function<double(const PureState&)>;

  Opf(FactorSpace space, Evaluator evaluator, OpfOrigin origin, std::string description,
      std::optional<Matrix> quantum_operator = std::nullopt);

  /// Throws if `state` is not on this OPF's space.
  double operator()(const PureState& state) const;

  /// sum_r p_r f(psi_r)
  double operator()(const Ensemble& ensemble) const;

  const FactorSpace& space() const { return space_; }
  OpfOrigin origin() const { return origin_; }
  const std::string& description() const { return description_; }

  /// Q with f(psi) = <psi|Q|psi>, when the construction makes it explicit.
  const std::optional<Matrix>& quantum_operator() const { return quantum_operator_; }

 private:
  FactorSpace space_;
  std::shared_ptr<const Evaluator> evaluator_;
  OpfOrigin origin_;
  std::string description_;
  std::optional<Matrix> quantum_operator_;
};

Opf constant_opf(FactorSpace space, double value);

/// f(psi) = <psi|Q|psi> for 0 <= Q <= I.
Opf opf_from_quantum(FactorSpace space, const Matrix& element);

/// Probability that the device, applied to `target` of the argument state,
/// reports `selector`; computed from the exact outcome distribution.
Opf opf_from_device(DeviceSpec spec, FactorSpace space, Subsystems target, Outcome selector);

/// Infinite-precision readout OPF of a single system: 1 on the ray of `phi`,
/// 0 elsewhere.
Opf readout_opf(const PureState& phi);

/// Convex combination; weights must be non-negative and sum to 1 (1e-9).
Opf mix(std::span<const Opf> opfs, std::span<const double> weights);

/// (f o U)(psi) = f(U psi)
Opf compose_unitary(const Opf& f, const Matrix& unitary);

/// f(psi) = g(psi (x) phi), where g lives on psi.space (x) phi.space.
Opf compose_system(const Opf& g, const PureState& background);

/// Finite list of OPFs summing to one on every pure state.
struct FullMeasurement {
  std::vector<Opf> outcomes;

  const FactorSpace& space() const { return outcomes.front().space(); }

  /// |sum_i f_i(psi) - 1|
  double completeness_violation(const PureState& state) const;
};

FullMeasurement quantum_measurement(const FactorSpace& space, const PovmSet& povm);

/// One OPF per listed outcome of a device.
FullMeasurement device_measurement(const DeviceSpec& spec, const FactorSpace& space,
                                   const Subsystems& target, const std::vector<Outcome>& outcomes);

/// Mixture of full measurements. relabel[k][i] names the combined outcome
/// that outcome i of measurement k is reported as; outcomes sharing a label
/// add up.
FullMeasurement mix_measurements(std::span<const FullMeasurement> measurements,
                                 std::span<const double> weights,
                                 const std::vector<std::vector<std::size_t>>& relabel);

/// Representative full measurements of a theory. `extended` members act on
/// space (x) background and feed the system-composition check.
struct MeasurementFamily {
  std::string name;
  FactorSpace space;
  std::vector<FullMeasurement> members;
  std::optional<FactorSpace> background;
  std::vector<FullMeasurement> extended;
};

MeasurementFamily quantum_povm_family(int dim, int background_dim, std::size_t count,
                                      RandomStream& rng);

/// Finite-precision von Neumann entropy meter on C^dim (and on the first
/// factor of C^dim (x) C^background_dim).
MeasurementFamily fpvnem_family(int dim, int precision, int background_dim);

/// Every value a finite-precision entropy meter on a dim-dimensional target
/// can report: multiples of 2^-m in [0, quantize(log2 dim)].
std::vector<double> fpvnem_outcomes(int dim, int precision);

struct ClosureReport {
  std::size_t samples = 0;
  double completeness = 0.0;  // members
  double mixture = 0.0;       // mixtures of members
  double unitary = 0.0;       // members composed with unitaries
  double system = 0.0;        // extended members composed with background states
  double range = 0.0;         // any value outside [0, 1]
  double operator_membership = 0.0;  // explicit operators outside 0 <= Q <= I

  double max_violation() const;
  bool passed(double tol = 1e-8) const { return max_violation() < tol; }
};

ClosureReport check_closure(const MeasurementFamily& family, std::size_t samples, RandomStream& rng);

enum class ProbeSet { Full, ProductOnly };

struct ProductFormOptions {
  ProbeSet probes = ProbeSet::Full;
  std::size_t random_probes = 16;
  double violation_threshold = 0.1;
};

struct ProductFormCertificate {
  double residual = 0.0;   // max |f(psi) - <psi|Q|psi>| over the probe set
  Matrix fitted_operator;  // least-squares Q
  std::size_t probe_count = 0;
  bool quadratic = false;  // residual < 1e-6
  bool violation = false;  // residual >= threshold
};

/// Fits one Hermitian operator Q on the joint space of a bipartite OPF over
/// a spanning probe set; a large residual certifies that no quadratic form,
/// and in particular no F (x) G form, reproduces f.
ProductFormCertificate product_form_witness(const Opf& f, RandomStream& rng,
                                            const ProductFormOptions& options = {});

enum class EstimationFamily { QuantumPovm, EntropyMeter, Spod, ErdSevrd, Readout };
enum class EstimationVerdict { Satisfied, SatisfiedTrivially, Fails };

std::string_view family_name(EstimationFamily family);
/// Throws ContractViolation on an unknown id.
EstimationFamily parse_family(std::string_view id);
std::string_view verdict_name(EstimationVerdict verdict);

struct EstimationWitness {
  Ensemble first;
  Ensemble second;
  Opf distinguishing;
  double value_first = 0.0;
  double value_second = 0.0;
  double density_distance = 0.0;  // max-abs difference of the two density matrices
  double list_disagreement = 0.0; // max difference of the finite list on the pair
};

struct EstimationReportCard {
  EstimationFamily family;
  EstimationVerdict verdict;
  std::vector<Opf> outcomes;     // the finite list that was checked
  double max_deviation = 0.0;    // worst reconstruction / constancy error seen
  std::optional<EstimationWitness> witness;
};

/// Informationally complete list of d^2 - 1 projectors: |j><j| for
/// j < d-1, then |j+k><j+k| and |j+ik><j+ik| for j < k.
std::vector<Matrix> informationally_complete_projectors(int dim);

/// Checks the state-estimation assumption for a family on C^dim (dim <= 4).
/// For the readout family `finite_list` (at most 64 OPFs) is the candidate
/// list the witness must fool; the quantum list is always included.
EstimationReportCard check_estimation_assumption(EstimationFamily family, int dim,
                                                 RandomStream& rng,
                                                 std::span<const Opf> finite_list = {});

/// Linear map on d x d Hermitian matrices, as a real d^2 x d^2 matrix acting
/// on coordinates in linalg::hermitian_basis(d).
struct CPMapCandidate {
  int dim = 0;
  RealMatrix action;

  Matrix apply(const Matrix& h) const;
};

struct UpdateMapCertificate {
  CPMapCandidate map;
  double residual = 0.0;
  std::size_t constraint_count = 0;
  bool feasible = false;   // residual < 1e-8
  bool violation = false;  // residual >= 0.1
};

/// Least-squares search for one state-independent linear map L with
/// L(|phi><phi|) = <phi|A|phi> |phi><phi| for every probe and for every
/// normalized pairwise superposition (phi_i +- phi_j). Probes must span the
/// Hermitian operators.
UpdateMapCertificate update_map_feasibility(const Matrix& element,
                                            std::span<const PureState> probes);

}  // namespace pqsim
