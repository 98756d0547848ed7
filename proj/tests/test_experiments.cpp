#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/experiments.hpp"
#include "pqsim/opf.hpp"
#include "testkit.hpp"

using namespace pqsim;

namespace {

const FactorSpace kQubit({2});
const double kS = 1.0 / std::sqrt(2.0);

Vector ket(std::initializer_list<Complex> a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (Complex x : a) v(i++) = x;
  return v / v.norm();
}

Ensemble qubits(std::vector<std::pair<Vector, double>> members) {
  std::vector<EnsembleMember> m;
  for (auto& [v, w] : members) m.push_back({PureState(kQubit, v), w});
  return Ensemble(std::move(m));
}

TEST(Fpvnem, QubitBoundAndVerdict) {
  RandomStream rng(1);
  const Certificate c = fpvnem_refutation(2, 3, 200, rng);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_EQ(c.evidence.at("outcome_bound"), 9.0);
  EXPECT_LE(c.evidence.at("outcome_count"), 9.0);
  EXPECT_EQ(c.evidence.at("entangled_value"), 0.0);
  EXPECT_LT(c.evidence.at("product_max_deviation"), 1e-12);
  EXPECT_GT(c.evidence.at("witness_residual"), 0.1);
}

TEST(Fpvnem, SinglePrecisionBit) {
  RandomStream rng(2);
  const Certificate c = fpvnem_refutation(2, 1, 100, rng);
  EXPECT_EQ(c.evidence.at("outcome_bound"), 3.0);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
}

TEST(Fpvnem, ProductOnlyProbesAreConsistent) {
  RandomStream rng(3);
  const Certificate c = fpvnem_refutation(2, 3, 200, rng, {true});
  EXPECT_EQ(c.verdict, Verdict::Consistent);
  EXPECT_EQ(c.details.at("probes"), "product");
}

TEST(Fpvnem, RejectsOutOfRangeArguments) {
  RandomStream rng(4);
  EXPECT_THROW(fpvnem_refutation(5, 3, 10, rng), ContractViolation);
  EXPECT_THROW(fpvnem_refutation(2, 9, 10, rng), ContractViolation);
}

TEST(SpodUpdate, DefaultElementIsRefuted) {
  RandomStream rng(5);
  const Certificate c = spod_update_refutation(rng);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_GE(c.evidence.at("min_fidelity"), 1.0 - 1e-12);
  EXPECT_GT(c.evidence.at("update_residual"), 0.1);
}

TEST(SpodUpdate, ScaledIdentityAndZeroAreConsistent) {
  for (double scale : {0.5, 0.0}) {
    RandomStream rng(6);
    SpodUpdateOptions opts;
    opts.element = scale * Matrix::Identity(2, 2);
    const Certificate c = spod_update_refutation(rng, opts);
    EXPECT_EQ(c.verdict, Verdict::Consistent) << scale;
    EXPECT_LT(c.evidence.at("update_residual"), 1e-10);
  }
}

TEST(NoSignalling, BellDropsFromOneToZero) {
  RandomStream rng(7);
  const Certificate c = no_signalling_demo(no_signalling_state("bell"), rng);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_NEAR(c.evidence.at("before"), 1.0, 1e-12);
  EXPECT_NEAR(c.evidence.at("after"), 0.0, 1e-12);
  EXPECT_NEAR(c.evidence.at("tv_distance"), 1.0, 1e-12);
}

TEST(NoSignalling, ProductIsConsistent) {
  RandomStream rng(8);
  const Certificate c = no_signalling_demo(no_signalling_state("product"), rng);
  EXPECT_EQ(c.verdict, Verdict::Consistent);
  EXPECT_NEAR(c.evidence.at("before"), 0.0, 1e-12);
  EXPECT_NEAR(c.evidence.at("tv_distance"), 0.0, 1e-12);
}

TEST(NoSignalling, PartialEntanglementMatchesBinaryEntropy) {
  RandomStream rng(9);
  const Certificate c = no_signalling_demo(no_signalling_state("partial"), rng);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_NEAR(c.evidence.at("before"), testkit::binary_entropy(0.36), 1e-10);
  EXPECT_NEAR(c.evidence.at("before"), 0.9426831892554922, 1e-10);
  EXPECT_NEAR(c.evidence.at("after"), 0.0, 1e-10);
}

TEST(NoSignalling, MeterAgreesWithLibraryEntropy) {
  RandomStream rng(10);
  for (const char* name : {"bell", "product", "partial"}) {
    const Certificate c = no_signalling_demo(no_signalling_state(name), rng);
    EXPECT_NEAR(c.evidence.at("before"), c.evidence.at("oracle_before"), 1e-10) << name;
    EXPECT_NEAR(c.evidence.at("after"), c.evidence.at("oracle_after"), 1e-10) << name;
  }
  EXPECT_THROW(no_signalling_state("ghz"), ContractViolation);
}

TEST(Cloning, InfinitePrecisionCopiesRandomStates) {
  RandomStream rng(11);
  const Certificate c = cloning_demo(2, rng);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_EQ(c.evidence.at("passing"), 100.0);
  EXPECT_GE(c.evidence.at("min_fidelity"), 1.0 - 1e-9);
}

TEST(Cloning, BasisInputIsCopiedExactly) {
  const PureState zero = PureState::basis(FactorSpace({3}), {2});
  const auto copy = clone_via_readout(zero, std::nullopt);
  ASSERT_TRUE(copy.has_value());
  EXPECT_LT(testkit::ray_infidelity(copy->amplitudes(), zero.amplitudes()), 1e-12);
}

TEST(Cloning, FinitePrecisionThreshold) {
  EXPECT_DOUBLE_EQ(cloning_threshold(8), 1.0 - 10.0 / 256.0);
  RandomStream rng(12);
  CloningOptions opts;
  opts.precision = 8;
  const Certificate c = cloning_demo(2, rng, opts);
  EXPECT_EQ(c.verdict, Verdict::ViolationCertified);
  EXPECT_GE(c.evidence.at("passing"), 95.0);
  EXPECT_EQ(c.details.at("precision"), "8");
}

TEST(Cloning, RejectsBadDimension) {
  RandomStream rng(13);
  EXPECT_THROW(cloning_demo(1, rng), ContractViolation);
  EXPECT_THROW(cloning_demo(5, rng), ContractViolation);
}

TEST(Tomography, RejectsTooFewShots) {
  RandomStream rng(14);
  const PureState zero = PureState::basis(kQubit, {0});
  EXPECT_THROW(tomography_estimate(zero, 0, rng), ContractViolation);
  EXPECT_THROW(tomography_estimate(zero, 99, rng), ContractViolation);
}

TEST(Tomography, RecoversBasisState) {
  RandomStream rng(15);
  const EstimationReport r = tomography_estimate(PureState::basis(kQubit, {0}), 30000, rng);
  ASSERT_TRUE(r.density.has_value());
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.metric, 0.02);
  EXPECT_EQ(r.intervals.size(), 3u);
  for (const auto& iv : r.intervals) {
    EXPECT_LE(iv.lower, iv.estimate);
    EXPECT_GE(iv.upper, iv.estimate);
  }
}

TEST(EnsembleReadout, SingleStateIsRecoveredExactly) {
  RandomStream rng(16);
  const Ensemble one = qubits({{ket({0.6, Complex(0, 0.8)}), 1.0}});
  const EstimationReport r = ensemble_estimate_readout(one, 200, rng);
  ASSERT_EQ(r.ensemble.size(), 1u);
  EXPECT_EQ(r.metric, 0.0);
  EXPECT_DOUBLE_EQ(r.ensemble[0].weight, 1.0);
  EXPECT_TRUE(r.pass);
}

TEST(EnsembleReadout, RejectsTooFewDraws) {
  RandomStream rng(17);
  EXPECT_THROW(ensemble_estimate_readout(qubits({{ket({1, 0}), 1.0}}), 99, rng), ContractViolation);
}

TEST(EnsembleOverlap, SingleBasisState) {
  RandomStream rng(18);
  const EstimationReport r = ensemble_estimate_overlap(qubits({{ket({1, 0}), 1.0}}), {0.1, 0.01}, 200, rng);
  ASSERT_TRUE(r.failure.empty());
  ASSERT_EQ(r.ensemble.size(), 1u);
  EXPECT_GE(std::norm(r.ensemble[0].state(0)), 0.99);
  EXPECT_TRUE(r.pass);
}

TEST(EnsembleOverlap, TwoMembersWeightsWithinTolerance) {
  RandomStream rng(19);
  const Ensemble src = qubits({{ket({1, 0}), 0.7}, {ket({kS, kS}), 0.3}});
  const EstimationReport r = ensemble_estimate_overlap(src, {0.1, 0.01}, 2000, rng);
  ASSERT_EQ(r.ensemble.size(), 2u);
  EXPECT_LT(r.metric, 0.05);
  double w_zero = 0.0;
  for (const auto& m : r.ensemble) {
    if (std::norm(m.state(0)) > 0.99) w_zero = m.weight;
  }
  EXPECT_NEAR(w_zero, 0.7, 0.05);
}

TEST(EnsembleOverlap, ScheduleAndCapRules) {
  RandomStream rng(20);
  const Ensemble src = qubits({{ket({1, 0}), 1.0}});
  EXPECT_THROW(ensemble_estimate_overlap(src, {}, 100, rng), ContractViolation);
  EXPECT_THROW(ensemble_estimate_overlap(src, {0.01, 0.1}, 100, rng), ContractViolation);
  const EstimationReport r = ensemble_estimate_overlap(src, {0.1, 0.001}, 100, rng, {1000, 0.05});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.failure.empty());
}

TEST(EnsembleDistance, UnmatchedWeightCountsInFull) {
  const Ensemble src = qubits({{ket({1, 0}), 0.5}, {ket({0, 1}), 0.5}});
  const std::vector<EstimatedMember> same{{ket({1, 0}), 0.5}, {ket({0, 1}), 0.5}};
  const std::vector<EstimatedMember> off{{ket({1, 0}), 0.4}, {ket({kS, kS}), 0.6}};
  EXPECT_NEAR(ensemble_distance(src, same, 1e-9), 0.0, 1e-15);
  EXPECT_NEAR(ensemble_distance(src, off, 1e-9), 0.1 + 0.5 + 0.6, 1e-12);
  EXPECT_TRUE(supports_disjoint(same, std::vector<EstimatedMember>{{ket({kS, kS}), 1.0}}, 1e-9));
  EXPECT_FALSE(supports_disjoint(same, off, 1e-9));
}

TEST(Determinism, SameSeedGivesSameEvidence) {
  auto run = [] {
    RandomStream rng(0xC0FFEE);
    return fpvnem_refutation(3, 2, 300, rng).evidence;
  };
  EXPECT_EQ(run(), run());
  auto clone = [] {
    RandomStream rng(0xC0FFEE);
    CloningOptions o;
    o.precision = 6;
    return cloning_demo(3, rng, o).evidence;
  };
  EXPECT_EQ(clone(), clone());
}

TEST(Wilson, IntervalValues) {
  const OutcomeInterval half = wilson_interval("x", 50, 100);
  EXPECT_DOUBLE_EQ(half.estimate, 0.5);
  EXPECT_NEAR(half.lower, 0.40383, 1e-5);
  EXPECT_NEAR(half.upper, 0.59617, 1e-5);
  testkit::Gen g(21);
  for (int i = 0; i < 200; ++i) {
    const auto n = static_cast<std::size_t>(g.integer(1, 5000));
    const auto k = static_cast<std::size_t>(g.integer(0, static_cast<std::int64_t>(n)));
    const OutcomeInterval iv = wilson_interval("y", k, n);
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double z = 1.959963984540054;
    const double denom = 1.0 + z * z / static_cast<double>(n);
    const double centre = (p + z * z / (2.0 * static_cast<double>(n))) / denom;
    const double half_width =
        z * std::sqrt(p * (1 - p) / static_cast<double>(n) + z * z / (4.0 * static_cast<double>(n * n))) / denom;
    EXPECT_NEAR(iv.lower, centre - half_width, 1e-12);
    EXPECT_NEAR(iv.upper, centre + half_width, 1e-12);
    EXPECT_LE(iv.lower, p + 1e-15);
    EXPECT_GE(iv.upper, p - 1e-15);
  }
  EXPECT_THROW(wilson_interval("z", 0, 0), ContractViolation);
}

TEST(RunTrials, OrderAndSeedsArePreserved) {
  const std::function<std::uint64_t(std::size_t, RandomStream&)> fn = [](std::size_t, RandomStream& rng) {
    return rng.next_u64();
  };
  const auto serial = run_trials<std::uint64_t>("order", 77, 64, fn, 1);
  const auto parallel = run_trials<std::uint64_t>("order", 77, 64, fn, 4);
  EXPECT_EQ(serial, parallel);
  RandomStream third(77, StreamId{stream_tag("order"), 3});
  EXPECT_EQ(serial[3], third.next_u64());
}

TEST(RunTrials, ExceptionsPropagate) {
  const std::function<int(std::size_t, RandomStream&)> fn = [](std::size_t i, RandomStream&) {
    if (i == 5) throw std::runtime_error("trial 5");
    return static_cast<int>(i);
  };
  EXPECT_THROW(run_trials<int>("boom", 1, 10, fn, 2), std::runtime_error);
}

}  // namespace
