#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pqsim/linalg.hpp"
#include "pqsim/measurement.hpp"
#include "pqsim/state.hpp"

namespace pqsim {

class RandomStream;

// ---------------------------------------------------------------------------
// Outcomes

struct RealValue {
  double value;
  bool operator==(const RealValue&) const = default;
};

struct IntegerLabel {
  std::int64_t label;
  bool operator==(const IntegerLabel&) const = default;
};

struct Bit {
  int value;  // 0 or 1
  bool operator==(const Bit&) const = default;
};

/// Classical description of a matrix. At finite precision m every real and
/// imaginary part is an exact multiple of 2^-m.
struct MatrixDescription {
  Matrix entries;
  std::optional<int> precision;
  bool operator==(const MatrixDescription& other) const {
    return precision == other.precision && entries.rows() == other.entries.rows() &&
           entries.cols() == other.entries.cols() && entries == other.entries;
  }
};

/// Error code of the finite-label devices. Carries the probability mass that
/// was excluded from the labelled outcomes.
struct Overflow {
  double excluded_probability = 0.0;
  bool operator==(const Overflow&) const { return true; }
};

using Outcome = std::variant<RealValue, IntegerLabel, Bit, MatrixDescription, Overflow>;

std::string to_string(const Outcome& outcome);

/// Outcome identity used when evaluating outcome probabilities: exact for
/// finite-precision values, labels and bits; within 1e-9 (max-abs) for
/// infinite-precision reals and matrices.
bool outcomes_match(const Outcome& a, const Outcome& b);

// ---------------------------------------------------------------------------
// Device parameters

/// Orthonormal basis of a factor space, stored as matrix columns.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix columns);
  static OrthonormalBasis computational(int dim);

  int dim() const { return static_cast<int>(columns_.rows()); }
  const Matrix& columns() const { return columns_; }
  Vector vector(int i) const { return columns_.col(i); }

 private:
  Matrix columns_;
};

struct MatrixFunction {
  enum class Kind { Identity, Power };
  Kind kind = Kind::Identity;
  int exponent = 1;

  static MatrixFunction identity() { return {}; }
  static MatrixFunction power(int n);
  Matrix apply(const Matrix& m) const;
};

/// RD / FPRD
struct ReadoutSpec {
  std::optional<OrthonormalBasis> basis;  // computational when absent
  std::optional<int> precision;
};

/// FRD / FFRD
struct FunctionReadoutSpec {
  MatrixFunction function;
  std::optional<OrthonormalBasis> basis;
  std::optional<int> precision;
};

/// ERD / FERD
struct ExpectationReadoutSpec {
  HermitianObservable observable;
  std::optional<int> precision;
};

enum class EigenvalueVariant {
  Value,         // SEVRD, or FSEVRD when precision is set
  IntegerLabel,  // ISEVRD
  Finite,        // FISEVRD: labels |i| <= precision, else overflow
};

/// SEVRD family. Labels count eigenspaces in ascending eigenvalue order from
/// `label_offset`.
struct EigenvalueSamplerSpec {
  HermitianObservable observable;
  EigenvalueVariant variant = EigenvalueVariant::Value;
  std::optional<int> precision;
  std::int64_t label_offset = 0;
};

/// SPOD / FSPOD; labels are 1-based.
struct PovmSamplerSpec {
  PovmSet povm;
  std::optional<int> finite_m;
};

/// SOD / SSOD
struct OverlapTestSpec {
  Vector target;            // unit vector on the target factors
  double threshold = 0.5;   // a in (0, 1)
  std::optional<double> sharpness;
};

/// BSD / SBSD; labels are 0-based basis indices.
struct BasisSelectSpec {
  OrthonormalBasis basis;
  std::optional<double> sharpness;
};

/// VNEM / REM / UEM and their finite-precision versions.
struct EntropyMeterSpec {
  double alpha = 1.0;
  std::optional<int> precision;
};

/// UEC / smoothed UEC
struct EntropyCertifierSpec {
  double alpha = 1.0;
  double entropy_threshold = 0.5;  // E
  std::optional<double> sharpness;
};

/// EA / FPEA; acts on a single factor.
struct EntanglementAnalyseSpec {
  std::optional<OrthonormalBasis> basis;
  std::optional<int> precision;
};

/// SURD / FSURD
struct UncertaintySamplerSpec {
  HermitianObservable observable;
  std::optional<int> precision;
};

using DeviceSpec =
    std::variant<ReadoutSpec, FunctionReadoutSpec, ExpectationReadoutSpec, EigenvalueSamplerSpec,
                 PovmSamplerSpec, OverlapTestSpec, BasisSelectSpec, EntropyMeterSpec,
                 EntropyCertifierSpec, EntanglementAnalyseSpec, UncertaintySamplerSpec>;

enum class DeviceKind {
  Readout,
  FunctionReadout,
  ExpectationReadout,
  EigenvalueSampler,
  PovmSampler,
  OverlapTest,
  BasisSelect,
  EntropyMeter,
  EntropyCertifier,
  EntanglementAnalyse,
  UncertaintySampler,
};

DeviceKind kind_of(const DeviceSpec& spec);
std::string_view kind_name(DeviceKind kind);
std::optional<DeviceKind> parse_kind(std::string_view name);

/// Throws ContractViolation unless every parameter fits a target of the
/// given dimension (and, for the analyser, a single target factor).
void validate(const DeviceSpec& spec, const FactorSpace& space, const Subsystems& target);

/// Whether the device consumes randomness for this input.
bool is_stochastic(const DeviceSpec& spec);

// ---------------------------------------------------------------------------
// Device operations. None of them modifies `global`; the post-measurement
// state is the input state.

MatrixDescription readout_density(const PureState& global, const Subsystems& target,
                                  const ReadoutSpec& spec = {});

MatrixDescription function_readout(const PureState& global, const Subsystems& target,
                                   const FunctionReadoutSpec& spec);

RealValue expectation_readout(const PureState& global, const Subsystems& target,
                              const ExpectationReadoutSpec& spec);

Outcome sample_eigenvalue(const PureState& global, const Subsystems& target,
                          const EigenvalueSamplerSpec& spec, RandomStream& rng);

/// SPRD: a SEVRD on the projector onto `phi`; 1 with probability
/// Tr(P_phi rho_1).
Bit sample_state_projection(const PureState& global, const Subsystems& target, const Vector& phi,
                            RandomStream& rng);

RealValue sample_uncertainty(const PureState& global, const Subsystems& target,
                             const UncertaintySamplerSpec& spec, RandomStream& rng);

Outcome sample_povm(const PureState& global, const Subsystems& target, const PovmSamplerSpec& spec,
                    RandomStream& rng);

Bit overlap_test(const PureState& global, const Subsystems& target, const OverlapTestSpec& spec,
                 RandomStream& rng);

IntegerLabel basis_select(const PureState& global, const Subsystems& target,
                          const BasisSelectSpec& spec, RandomStream& rng);

RealValue entropy_meter(const PureState& global, const Subsystems& target,
                        const EntropyMeterSpec& spec);

Bit entropy_certify(const PureState& global, const Subsystems& target,
                    const EntropyCertifierSpec& spec, RandomStream& rng);

MatrixDescription entanglement_analyse(const PureState& global, std::size_t target_factor,
                                       const EntanglementAnalyseSpec& spec = {});

/// Dispatches on the DeviceSpec alternative.
Outcome apply_device(const DeviceSpec& spec, const PureState& global, const Subsystems& target,
                     RandomStream& rng);

/// Exact outcome distribution of a device on a state: one entry per
/// eigenspace / POVM element / basis vector / bit, in device order. Entries
/// are not re-aggregated when distinct branches report the same value.
std::vector<std::pair<Outcome, double>> outcome_distribution(const DeviceSpec& spec,
                                                             const PureState& global,
                                                             const Subsystems& target);

/// Whether `selector` lies in the device's outcome set for a target of the
/// given dimension.
bool in_outcome_set(const DeviceSpec& spec, int target_dim, const Outcome& selector);

/// Logistic 1/(1+exp(-x)), stable for large |x|.
double logistic(double x);

}  // namespace pqsim
