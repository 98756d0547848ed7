#include <cmath>

#include <gtest/gtest.h>

#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/measurement.hpp"
#include "pqsim/random.hpp"
#include "pqsim/state.hpp"
#include "testkit.hpp"

using namespace pqsim;

namespace {

const FactorSpace kQubit({2});
const FactorSpace kTwoQubits({2, 2});

Vector vec(std::initializer_list<Complex> a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (Complex x : a) v(i++) = x;
  return v;
}

Matrix diag(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

PureState bell() { return maximally_entangled(2); }
PureState plus() { return PureState::normalized(kQubit, vec({1, 1})); }

HermitianObservable pauli_z() { return HermitianObservable(diag(1.0, -1.0)); }

TEST(FactorSpace, RejectsUnitAndEmptyFactors) {
  EXPECT_THROW(FactorSpace({2, 1}), ContractViolation);
  EXPECT_THROW(FactorSpace(std::vector<int>{}), ContractViolation);
  EXPECT_EQ(FactorSpace({2, 3, 2}).total_dim(), 12);
}

TEST(PureState, RejectsUnnormalizedAmplitudes) {
  EXPECT_THROW(PureState(kQubit, vec({1, 1})), ContractViolation);
  EXPECT_NO_THROW(PureState(kQubit, vec({1, 1e-10})));
  EXPECT_THROW(PureState::normalized(kQubit, vec({0, 0})), ContractViolation);
}

TEST(TensorProduct, BasisCase) {
  const PureState t = tensor_product(PureState::basis(kQubit, {0}), PureState::basis(kQubit, {1}));
  EXPECT_EQ(t.space(), kTwoQubits);
  EXPECT_EQ(t.amplitudes(), vec({0, 1, 0, 0}));
}

TEST(TensorProduct, RandomStatesStayNormalized) {
  testkit::Gen g(11);
  const PureState a(FactorSpace({3}), g.unit_vector(3));
  const PureState b(kQubit, g.unit_vector(2));
  EXPECT_NEAR(tensor_product(a, b).amplitudes().norm(), 1.0, 1e-12);
}

TEST(PartialTrace, BellKeepFirst) {
  const Matrix rho = partial_trace(bell(), {0}).matrix();
  EXPECT_LT(testkit::max_abs(rho - diag(0.5, 0.5)), 1e-15);
}

TEST(PartialTrace, ProductStateKeepsFactorState) {
  const PureState s = PureState::basis(kTwoQubits, {0, 1});
  EXPECT_LT(testkit::max_abs(partial_trace(s, {0}).matrix() - diag(1, 0)), 1e-15);
  EXPECT_LT(testkit::max_abs(partial_trace(s, {1}).matrix() - diag(0, 1)), 1e-15);
}

TEST(PartialTrace, QubitQutritMatchesIndexLoopOracle) {
  testkit::Gen g(12);
  const FactorSpace s({2, 3});
  for (int i = 0; i < 20; ++i) {
    const PureState psi = g.state(s);
    for (std::size_t keep : {0u, 1u}) {
      const Matrix oracle = testkit::partial_trace(psi.amplitudes(), {2, 3}, {keep});
      EXPECT_LT(testkit::max_abs(partial_trace(psi, {keep}).matrix() - oracle), 1e-12);
    }
  }
}

TEST(PartialTrace, RejectsEmptyOrFullKeep) {
  EXPECT_THROW(partial_trace(bell(), {}), ContractViolation);
  EXPECT_THROW(partial_trace(bell(), {0, 1}), ContractViolation);
  EXPECT_THROW(partial_trace(bell(), {2}), ContractViolation);
}

TEST(Schmidt, BellHasTwoEqualWeights) {
  const auto sd = schmidt_decompose(bell(), {0});
  ASSERT_EQ(sd.rank(), 2u);
  EXPECT_NEAR(sd.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(sd.weights[1], 0.5, 1e-12);
}

TEST(Schmidt, ProductStateHasRankOne) {
  const auto sd = schmidt_decompose(tensor_product(plus(), PureState::basis(kQubit, {1})), {1});
  ASSERT_EQ(sd.rank(), 1u);
  EXPECT_NEAR(sd.weights[0], 1.0, 1e-12);
}

TEST(Schmidt, PartiallyEntangledWeightsDescend) {
  const PureState s(kTwoQubits, vec({std::sqrt(0.36), 0, 0, std::sqrt(0.64)}));
  const auto sd = schmidt_decompose(s, {0});
  ASSERT_EQ(sd.rank(), 2u);
  EXPECT_NEAR(sd.weights[0], 0.64, 1e-12);
  EXPECT_NEAR(sd.weights[1], 0.36, 1e-12);
  EXPECT_LT(testkit::ray_infidelity(sd.reconstruct().amplitudes(), s.amplitudes()), 1e-12);
}

TEST(Born, ComputationalPovmOnPlus) {
  const PovmSet z({diag(1, 0), diag(0, 1)});
  const auto p = born_probabilities(DensityMatrix::from_pure(plus()), z);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(Born, IdentityPovmGivesCertainty) {
  testkit::Gen g(13);
  const auto p = born_probabilities(DensityMatrix(g.density(3, 2)), PovmSet({Matrix::Identity(3, 3)}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0], 1.0, 1e-12);
}

TEST(Born, RandomRankOnePovmMatchesTraceOracle) {
  testkit::Gen g(14);
  const Matrix u = g.unitary(3);
  std::vector<Matrix> elems;
  for (int i = 0; i < 3; ++i) elems.push_back(u.col(i) * u.col(i).adjoint());
  const Matrix rho = g.density(3, 3);
  const auto p = born_probabilities(DensityMatrix(rho), PovmSet(elems));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], testkit::trace_product(elems[i], rho).real(), 1e-12);
}

TEST(Born, DimensionMismatchRejected) {
  EXPECT_THROW(born_probabilities(DensityMatrix::maximally_mixed(3), PovmSet({diag(1, 0), diag(0, 1)})),
               ContractViolation);
}

TEST(Povm, RejectsIncompleteSet) {
  EXPECT_THROW(PovmSet({diag(1, 0), diag(0, 0.9)}), ContractViolation);
  EXPECT_THROW(PovmSet({diag(1.5, 1), diag(-0.5, 0)}), ContractViolation);
}

TEST(Observable, DegenerateEigenvaluesShareACluster) {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0 + 1e-12;
  m(2, 2) = -2.0;
  const HermitianObservable obs(m);
  ASSERT_EQ(obs.clusters().size(), 2u);
  EXPECT_EQ(obs.clusters()[0].multiplicity, 1);
  EXPECT_EQ(obs.clusters()[1].multiplicity, 2);
  EXPECT_LT(obs.clusters()[0].value, obs.clusters()[1].value);
}

TEST(MeasureProjective, SchmidtBasisOnBellCollapses) {
  const PureState b = bell();
  for (std::uint64_t t = 0; t < 20; ++t) {
    RandomStream rng(5, {1, t});
    const auto r = measure_projective(b, pauli_z(), {1}, rng);
    EXPECT_NEAR(r.probability, 0.5, 1e-12);
    const PureState expect = r.cluster == 1 ? PureState::basis(kTwoQubits, {0, 0}) : PureState::basis(kTwoQubits, {1, 1});
    EXPECT_TRUE(r.post_state.same_ray(expect));
  }
}

TEST(MeasureProjective, EigenstateIsCertainAndUnchanged) {
  RandomStream rng(5);
  const PureState zero = PureState::basis(kQubit, {0});
  const auto r = measure_projective(zero, pauli_z(), {0}, rng);
  EXPECT_EQ(r.cluster, 1u);  // +1 is the larger eigenvalue
  EXPECT_NEAR(r.probability, 1.0, 1e-15);
  EXPECT_TRUE(r.post_state.same_ray(zero));
}

TEST(MeasureProjective, PlusFrequencyWithinFourSigma) {
  RandomStream rng(0x5EED, {stream_tag("plus"), 0});
  const PureState p = plus();
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += measure_projective(p, pauli_z(), {0}, rng).cluster == 1 ? 1 : 0;
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(MeasureProjective, NeverSelectsZeroProbabilityBranch) {
  const PureState zero = PureState::basis(kQubit, {0});
  for (std::uint64_t t = 0; t < 200; ++t) {
    RandomStream rng(t);
    EXPECT_EQ(measure_projective(zero, pauli_z(), {0}, rng).cluster, 1u);
  }
}

TEST(Fidelity, Examples) {
  const DensityMatrix zero = DensityMatrix::from_pure(PureState::basis(kQubit, {0}));
  const DensityMatrix one = DensityMatrix::from_pure(PureState::basis(kQubit, {1}));
  EXPECT_NEAR(fidelity(zero, zero), 1.0, 1e-9);
  EXPECT_NEAR(fidelity(zero, one), 0.0, 1e-12);
  EXPECT_NEAR(fidelity(zero, DensityMatrix::from_pure(plus())), 0.5, 1e-12);
  testkit::Gen g(15);
  const DensityMatrix r(g.density(3, 3));
  EXPECT_NEAR(fidelity(r, r), 1.0, 1e-9);
}

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(0.3, 2), 0.25);
  EXPECT_EQ(quantize(0.5, 1), 0.5);
  EXPECT_EQ(quantize(0.375, 2), 0.5);
  EXPECT_EQ(quantize(0.125, 2), 0.0);
  EXPECT_EQ(quantize(-0.375, 2), -0.5);
  EXPECT_THROW(quantize(0.3, 0), ContractViolation);
}

TEST(Entropy, VonNeumannExamples) {
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::from_pure(plus())), 0.0, 1e-12);
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix::maximally_mixed(2)), 1.0, 1e-12);
  EXPECT_NEAR(von_neumann_entropy(DensityMatrix(diag(0.25, 0.75))), testkit::shannon_bits({0.25, 0.75}), 1e-10);
}

TEST(Entropy, RenyiExamples) {
  for (double a : {0.0, 0.5, 2.0, 7.0}) EXPECT_NEAR(renyi_entropy(DensityMatrix::from_pure(plus()), a), 0.0, 1e-12);
  EXPECT_NEAR(renyi_entropy(DensityMatrix::maximally_mixed(2), 2.0), 1.0, 1e-12);
  EXPECT_NEAR(renyi_entropy(DensityMatrix(diag(0.25, 0.75)), 2.0), -std::log2(0.625), 1e-12);
  EXPECT_NEAR(renyi_entropy(DensityMatrix(diag(0.25, 0.75)), 2.0), 0.678, 1e-3);
}

TEST(Entropy, RenyiRejectsAlphaOneAndNegative) {
  EXPECT_THROW(renyi_entropy(DensityMatrix::maximally_mixed(2), 1.0), ContractViolation);
  EXPECT_THROW(renyi_entropy(DensityMatrix::maximally_mixed(2), -0.5), ContractViolation);
  EXPECT_NEAR(entropy(DensityMatrix::maximally_mixed(2), 1.0), 1.0, 1e-12);
}

TEST(DensityMatrix, InvariantsEnforced) {
  EXPECT_THROW(DensityMatrix(diag(0.6, 0.6)), ContractViolation);
  EXPECT_THROW(DensityMatrix(diag(1.5, -0.5)), ContractViolation);
  Matrix nh = diag(0.5, 0.5);
  nh(0, 1) = 0.1;
  EXPECT_THROW((DensityMatrix(nh)), ContractViolation);
}

TEST(Ensemble, InvariantsEnforced) {
  const PureState z = PureState::basis(kQubit, {0});
  EXPECT_THROW(Ensemble({{z, 0.5}, {z, 0.4}}), ContractViolation);
  EXPECT_THROW(Ensemble({{z, 1.0}, {z, 0.0}}), ContractViolation);
  EXPECT_THROW(Ensemble({{z, 0.5}, {PureState::basis(FactorSpace({3}), {0}), 0.5}}), ContractViolation);
  const Ensemble e({{z, 0.5}, {PureState::basis(kQubit, {1}), 0.5}});
  EXPECT_LT(testkit::max_abs(e.density_matrix().matrix() - diag(0.5, 0.5)), 1e-15);
}

TEST(RandomStream, ReproducibleAndDistinctPerTrial) {
  RandomStream a(42, {7, 3});
  RandomStream b(42, {7, 3});
  RandomStream c(42, {7, 4});
  int diff = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    ASSERT_EQ(x, b.next_u64());
    diff += x != c.next_u64();
  }
  EXPECT_GT(diff, 90);
  EXPECT_EQ(stream_tag("fpvnem"), stream_tag("fpvnem"));
  EXPECT_NE(stream_tag("fpvnem"), stream_tag("cloning"));
}

}  // namespace
