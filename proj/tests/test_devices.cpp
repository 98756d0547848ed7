#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "pqsim/devices.hpp"
#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/random.hpp"
#include "testkit.hpp"

using namespace pqsim;

namespace {

const FactorSpace kQubit({2});
const FactorSpace kTwoQubits({2, 2});

Matrix diag(std::initializer_list<double> d) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) m(i, i) = x, ++i;
  return m;
}

Vector e(int dim, int i) {
  Vector v = Vector::Zero(dim);
  v(i) = 1.0;
  return v;
}

PureState bell() { return maximally_entangled(2); }
PureState zero_one() { return PureState::basis(kTwoQubits, {0, 1}); }
PureState ket0() { return PureState::basis(kQubit, {0}); }
PureState plus() { return PureState::normalized(kQubit, Vector::Ones(2)); }
HermitianObservable pauli_z() { return HermitianObservable(diag({1, -1})); }

/// Probability of `o` under the device's exact distribution.
double prob_of(const DeviceSpec& spec, const PureState& g, const Subsystems& t, const pqsim::Outcome& o) {
  double p = 0.0;
  for (const auto& [x, pr] : outcome_distribution(spec, g, t)) {
    if (outcomes_match(x, o)) p += pr;
  }
  return p;
}

/// Distribution assembled from samples, keyed by to_string.
std::map<std::string, double> sampled(const DeviceSpec& spec, const PureState& g, const Subsystems& t, int n) {
  RandomStream rng(77);
  std::map<std::string, double> f;
  for (int i = 0; i < n; ++i) f[to_string(apply_device(spec, g, t, rng))] += 1.0 / n;
  return f;
}

TEST(Readout, BellComputationalBasis) {
  const auto d = readout_density(bell(), {0});
  EXPECT_FALSE(d.precision.has_value());
  EXPECT_LT(testkit::max_abs(d.entries - diag({0.5, 0.5})), 1e-15);
}

TEST(Readout, ProductStateAtPrecisionThreeIsExact) {
  const auto d = readout_density(zero_one(), {0}, {std::nullopt, 3});
  EXPECT_EQ(d.entries, diag({1, 0}));
  EXPECT_EQ(d.precision, 3);
}

TEST(Readout, EntryPointThreeQuantizesToQuarter) {
  const PureState s(kQubit, (Vector(2) << std::sqrt(0.3), std::sqrt(0.7)).finished());
  const auto d = readout_density(s, {0}, {std::nullopt, 2});
  EXPECT_EQ(d.entries(0, 0).real(), 0.25);
  EXPECT_EQ(d.entries(1, 1).real(), 0.75);
}

TEST(FunctionReadout, PurePowerIsIdempotent) {
  const auto r = function_readout(plus(), {0}, {MatrixFunction::power(3), std::nullopt, std::nullopt});
  EXPECT_LT(testkit::max_abs(r.entries - plus().projector()), 1e-15);
}

TEST(FunctionReadout, MixedSquare) {
  const auto r = function_readout(bell(), {1}, {MatrixFunction::power(2), std::nullopt, std::nullopt});
  EXPECT_LT(testkit::max_abs(r.entries - diag({0.25, 0.25})), 1e-15);
}

TEST(FunctionReadout, RandomSquareMatchesMultiplication) {
  testkit::Gen g(21);
  const PureState s = g.state(FactorSpace({3, 2}));
  const Matrix rho = testkit::partial_trace(s.amplitudes(), {3, 2}, {0});
  const auto r = function_readout(s, {0}, {MatrixFunction::power(2), std::nullopt, std::nullopt});
  EXPECT_LT(testkit::max_abs(r.entries - rho * rho), 1e-12);
  EXPECT_THROW(MatrixFunction::power(0), ContractViolation);
}

TEST(ExpectationReadout, Examples) {
  EXPECT_EQ(expectation_readout(ket0(), {0}, {pauli_z(), std::nullopt}).value, 1.0);
  EXPECT_NEAR(expectation_readout(bell(), {0}, {pauli_z(), std::nullopt}).value, 0.0, 1e-15);
  testkit::Gen g(22);
  const Matrix a = g.hermitian(2);
  const PureState s = g.state(kTwoQubits);
  const Matrix rho = testkit::partial_trace(s.amplitudes(), {2, 2}, {1});
  EXPECT_NEAR(expectation_readout(s, {1}, {HermitianObservable(a), std::nullopt}).value,
              testkit::trace_product(a, rho).real(), 1e-12);
}

TEST(EigenvalueSampler, ZOnPlusIsFair) {
  const EigenvalueSamplerSpec spec{pauli_z(), EigenvalueVariant::Value, std::nullopt, 0};
  EXPECT_NEAR(prob_of(spec, plus(), {0}, RealValue{1.0}), 0.5, 1e-15);
  EXPECT_NEAR(prob_of(spec, plus(), {0}, RealValue{-1.0}), 0.5, 1e-15);
}

TEST(EigenvalueSampler, StateProjectionOnItselfReturnsOne) {
  for (std::uint64_t t = 0; t < 50; ++t) {
    RandomStream rng(t);
    EXPECT_EQ(sample_state_projection(ket0(), {0}, e(2, 0), rng).value, 1);
  }
}

TEST(EigenvalueSampler, FiniteVariantOverflowMass) {
  // labels -1, 0, 1, 2 with m = 1: the label-2 cluster overflows
  const HermitianObservable obs(diag({-3, -1, 1, 3}));
  const EigenvalueSamplerSpec spec{obs, EigenvalueVariant::Finite, 1, -1};
  const PureState mixed = maximally_entangled(4);
  const auto born = born_probabilities(DensityMatrix::maximally_mixed(4), PovmSet::from_observable(obs));
  EXPECT_NEAR(prob_of(spec, mixed, {0}, Overflow{}), 1.0 - (born[0] + born[1] + born[2]), 1e-12);
  EXPECT_NEAR(prob_of(spec, mixed, {0}, Overflow{}), 0.25, 1e-12);
  EXPECT_FALSE(in_outcome_set(spec, 4, IntegerLabel{2}));
  EXPECT_TRUE(in_outcome_set(spec, 4, IntegerLabel{-1}));
}

TEST(EigenvalueSampler, IntegerLabelsAscendFromOffset) {
  const HermitianObservable obs(diag({2, -1, 0.5}));
  const EigenvalueSamplerSpec spec{obs, EigenvalueVariant::IntegerLabel, std::nullopt, 0};
  const PureState s = PureState::basis(FactorSpace({3}), {1});  // eigenvalue -1, the smallest
  EXPECT_NEAR(prob_of(spec, s, {0}, IntegerLabel{0}), 1.0, 1e-15);
}

TEST(EigenvalueSampler, FinitePrecisionMergeIsReportedPostMerge) {
  // 0.30 and 0.26 both quantize to 0.25 at m=2; probabilities stay per cluster
  const HermitianObservable obs(diag({0.30, 0.26}));
  const EigenvalueSamplerSpec spec{obs, EigenvalueVariant::Value, 2, 0};
  const auto dist = outcome_distribution(spec, bell(), {0});
  ASSERT_EQ(dist.size(), 2u);
  EXPECT_NEAR(prob_of(spec, bell(), {0}, RealValue{0.25}), 1.0, 1e-15);
}

TEST(UncertaintySampler, Examples) {
  const UncertaintySamplerSpec spec{pauli_z(), std::nullopt};
  EXPECT_NEAR(prob_of(spec, ket0(), {0}, RealValue{0.0}), 1.0, 1e-15);
  EXPECT_NEAR(prob_of(spec, bell(), {0}, RealValue{1.0}), 0.5, 1e-15);
  EXPECT_NEAR(prob_of(spec, bell(), {0}, RealValue{-1.0}), 0.5, 1e-15);
}

TEST(UncertaintySampler, QuantizesOutputNotShift) {
  // <Z> on cos^2 = 0.7 is 0.4; outputs 0.6 and -1.4, quantized at m=1 to 0.5 and -1.5
  const PureState s(kQubit, (Vector(2) << std::sqrt(0.7), std::sqrt(0.3)).finished());
  const UncertaintySamplerSpec spec{pauli_z(), 1};
  EXPECT_NEAR(prob_of(spec, s, {0}, RealValue{0.5}), 0.7, 1e-12);
  EXPECT_NEAR(prob_of(spec, s, {0}, RealValue{-1.5}), 0.3, 1e-12);
}

TEST(PovmSampler, HalfHalfIsUniform) {
  const PovmSamplerSpec spec{PovmSet({diag({0.5, 0.5}), diag({0.5, 0.5})}), std::nullopt};
  EXPECT_NEAR(prob_of(spec, ket0(), {0}, IntegerLabel{1}), 0.5, 1e-15);
  EXPECT_NEAR(prob_of(spec, ket0(), {0}, IntegerLabel{2}), 0.5, 1e-15);
}

TEST(PovmSampler, ProjectiveMatchesBorn) {
  testkit::Gen g(23);
  const testkit::BuiltObservable b = testkit::build_observable(g.unitary(3), {0.1, 0.7, 1.3});
  const HermitianObservable obs(b.matrix);
  const PureState s = g.state(FactorSpace({3, 2}));
  const auto born = born_probabilities(partial_trace(s, {0}), PovmSet::from_observable(obs));
  const PovmSamplerSpec spec{PovmSet::from_observable(obs), std::nullopt};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(prob_of(spec, s, {0}, IntegerLabel{static_cast<std::int64_t>(i + 1)}), born[i], 1e-12);
  }
}

TEST(PovmSampler, FiniteOverflowIsComplementOfFirst) {
  testkit::Gen g(24);
  const auto elems = g.povm(2, 3);
  const PureState s = g.state(kTwoQubits);
  const PovmSamplerSpec spec{PovmSet(elems), 1};
  const Matrix rho = testkit::partial_trace(s.amplitudes(), {2, 2}, {0});
  EXPECT_NEAR(prob_of(spec, s, {0}, Overflow{}), 1.0 - testkit::trace_product(elems[0], rho).real(), 1e-12);
}

TEST(OverlapTest, HardExamples) {
  RandomStream rng(1);
  EXPECT_EQ(overlap_test(ket0(), {0}, {e(2, 0), 0.9, std::nullopt}, rng).value, 1);
  EXPECT_EQ(overlap_test(bell(), {0}, {e(2, 0), 0.6, std::nullopt}, rng).value, 0);
}

TEST(OverlapTest, SmoothedAtThresholdIsFair) {
  // |+>|+> has exactly representable amplitudes; overlap with |0> is exactly 0.5
  const PureState s(kTwoQubits, Vector::Constant(4, 0.5));
  const OverlapTestSpec spec{e(2, 0), 0.5, 3.0};
  EXPECT_EQ(prob_of(spec, s, {0}, Bit{1}), 0.5);
}

TEST(OverlapTest, RejectsBadParameters) {
  EXPECT_THROW(validate(OverlapTestSpec{e(2, 0), 1.0, std::nullopt}, kQubit, {0}), ContractViolation);
  EXPECT_THROW(validate(OverlapTestSpec{e(2, 0), 0.5, 0.0}, kQubit, {0}), ContractViolation);
  EXPECT_THROW(validate(OverlapTestSpec{Vector::Ones(2), 0.5, std::nullopt}, kQubit, {0}), ContractViolation);
}

TEST(BasisSelect, Examples) {
  const BasisSelectSpec hard{OrthonormalBasis::computational(2), std::nullopt};
  EXPECT_NEAR(prob_of(hard, ket0(), {0}, IntegerLabel{0}), 1.0, 1e-15);
  EXPECT_NEAR(prob_of(hard, bell(), {0}, IntegerLabel{0}), 0.5, 1e-15);
  EXPECT_NEAR(prob_of(hard, bell(), {0}, IntegerLabel{1}), 0.5, 1e-15);
  for (double k : {0.1, 5.0, 1e6}) {
    const BasisSelectSpec smooth{OrthonormalBasis::computational(2), k};
    EXPECT_NEAR(prob_of(smooth, bell(), {0}, IntegerLabel{1}), 0.5, 1e-15);
  }
  const auto f = sampled(hard, bell(), {0}, 4000);
  EXPECT_NEAR(f.at("label:0"), 0.5, 0.04);
}

TEST(EntropyMeter, Examples) {
  EXPECT_NEAR(entropy_meter(bell(), {0}, {1.0, std::nullopt}).value, 1.0, 1e-12);
  EXPECT_EQ(entropy_meter(bell(), {0}, {1.0, 3}).value, 1.0);
  for (double a : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    EXPECT_NEAR(entropy_meter(zero_one(), {1}, {a, std::nullopt}).value, 0.0, 1e-12);
    EXPECT_EQ(entropy_meter(zero_one(), {1}, {a, 4}).value, 0.0);
  }
}

TEST(EntropyCertifier, Examples) {
  RandomStream rng(2);
  EXPECT_EQ(entropy_certify(bell(), {0}, {1.0, 0.5, std::nullopt}, rng).value, 1);
  EXPECT_EQ(entropy_certify(zero_one(), {0}, {1.0, 0.2, std::nullopt}, rng).value, 0);
  for (double k : {0.5, 2.0, 9.0}) {
    const EntropyCertifierSpec spec{1.0, 0.3, k};
    EXPECT_NEAR(prob_of(spec, zero_one(), {0}, Bit{1}), 1.0 / (1.0 + std::exp(k * 0.3)), 1e-15);
  }
}

TEST(EntropyCertifier, ThresholdRangeIsEnforced) {
  for (double bad : {0.0, 1.0, 1.5, -0.1}) {
    EXPECT_THROW(validate(EntropyCertifierSpec{1.0, bad, std::nullopt}, kTwoQubits, {0}), ContractViolation) << bad;
  }
  try {
    validate(EntropyCertifierSpec{1.0, 1.5, std::nullopt}, kTwoQubits, {0});
  } catch (const ContractViolation& ex) {
    EXPECT_NE(std::string(ex.what()).find("0 < E < 1"), std::string::npos) << ex.what();
  }
  EXPECT_NO_THROW(validate(EntropyCertifierSpec{1.0, 1.5, std::nullopt}, FactorSpace({4, 2}), {0}));
}

TEST(EntanglementAnalyse, Examples) {
  EXPECT_LT(testkit::max_abs(entanglement_analyse(bell(), 0).entries - diag({0.5, 0.5})), 1e-15);
  testkit::Gen g(25);
  const PureState chi(FactorSpace({3}), g.unit_vector(3));
  const PureState s = tensor_product(ket0(), chi);
  EXPECT_LT(testkit::max_abs(entanglement_analyse(s, 0).entries - diag({1, 0})), 1e-15);
  const PureState r = g.state(FactorSpace({2, 3}));
  EXPECT_LT(testkit::max_abs(entanglement_analyse(r, 1).entries - readout_density(r, {1}).entries.transpose()), 1e-10);
}

TEST(EntanglementAnalyse, NeedsSingleFactor) {
  EXPECT_THROW(validate(EntanglementAnalyseSpec{}, FactorSpace({2, 2, 2}), {0, 1}), ContractViolation);
}

TEST(Catalog, NamesRoundTripAndStochasticFlags) {
  const std::set<std::string_view> names{"Readout", "FunctionReadout", "ExpectationReadout",
                                         "EigenvalueSampler", "PovmSampler", "OverlapTest",
                                         "BasisSelect", "EntropyMeter", "EntropyCertifier",
                                         "EntanglementAnalyse", "UncertaintySampler"};
  for (int k = 0; k < 11; ++k) {
    const auto kind = static_cast<DeviceKind>(k);
    EXPECT_TRUE(names.count(kind_name(kind))) << kind_name(kind);
    EXPECT_EQ(parse_kind(kind_name(kind)), kind);
  }
  EXPECT_FALSE(parse_kind("Teleporter").has_value());
  EXPECT_FALSE(is_stochastic(OverlapTestSpec{e(2, 0), 0.5, std::nullopt}));
  EXPECT_TRUE(is_stochastic(OverlapTestSpec{e(2, 0), 0.5, 1.0}));
  EXPECT_TRUE(is_stochastic(PovmSamplerSpec{PovmSet({Matrix::Identity(2, 2)}), std::nullopt}));
  EXPECT_FALSE(is_stochastic(EntropyMeterSpec{}));
}

TEST(Outcomes, MatchingRules) {
  EXPECT_TRUE(outcomes_match(RealValue{0.5}, RealValue{0.5 + 1e-12}));
  EXPECT_FALSE(outcomes_match(RealValue{0.5}, RealValue{0.5 + 1e-6}));
  EXPECT_FALSE(outcomes_match(IntegerLabel{1}, Bit{1}));
  EXPECT_TRUE(outcomes_match(Overflow{0.3}, Overflow{0.1}));
  const MatrixDescription a{diag({0.5, 0.5}), 3};
  const MatrixDescription b{diag({0.5, 0.5}), std::nullopt};
  EXPECT_FALSE(outcomes_match(a, b));
}

TEST(Devices, GlobalStateIsNeverModified) {
  testkit::Gen g(26);
  const PureState s = g.state(FactorSpace({2, 3}));
  const Vector before = s.amplitudes();
  RandomStream rng(3);
  const HermitianObservable obs(g.hermitian(2));
  const std::vector<DeviceSpec> specs{
      ReadoutSpec{}, FunctionReadoutSpec{MatrixFunction::power(2), std::nullopt, 4},
      ExpectationReadoutSpec{obs, std::nullopt}, EigenvalueSamplerSpec{obs, EigenvalueVariant::Value, std::nullopt, 0},
      PovmSamplerSpec{PovmSet(g.povm(2, 3)), std::nullopt}, OverlapTestSpec{e(2, 1), 0.3, 2.0},
      BasisSelectSpec{OrthonormalBasis(g.unitary(2)), std::nullopt}, EntropyMeterSpec{2.0, 5},
      EntropyCertifierSpec{1.0, 0.4, 1.0}, EntanglementAnalyseSpec{}, UncertaintySamplerSpec{obs, 3}};
  for (const auto& spec : specs) {
    for (int i = 0; i < 5; ++i) apply_device(spec, s, {0}, rng);
    EXPECT_EQ(s.amplitudes(), before) << kind_name(kind_of(spec));
  }
}

}  // namespace
