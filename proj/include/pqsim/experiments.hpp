#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pqsim/random.hpp"
#include "pqsim/state.hpp"

namespace pqsim {

enum class Verdict { ViolationCertified, Consistent, Fail };

std::string_view verdict_name(Verdict verdict);

struct Certificate {
  std::string experiment;
  Verdict verdict = Verdict::Fail;
  std::map<std::string, double> evidence;
  std::map<std::string, std::string> details;
  std::uint64_t seed = 0;
};

/// Observed frequency of one outcome with its Wilson score interval.
struct OutcomeInterval {
  std::string label;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t trials = 0;
};

struct EstimatedMember {
  Vector state;
  double weight = 0.0;
};

struct EstimationReport {
  std::string experiment;
  std::optional<DensityMatrix> density;  // tomography
  std::vector<EstimatedMember> ensemble;  // ensemble estimation
  std::vector<OutcomeInterval> intervals;
  std::size_t trials = 0;
  double confidence = 0.95;
  std::string metric_name;
  double metric = 0.0;
  double criterion = 0.0;
  bool pass = false;
  std::string failure;  // set when the protocol could not run to completion
  std::map<std::string, double> extra;
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
OutcomeInterval wilson_interval(std::string label, std::size_t successes, std::size_t trials,
                                double z = 1.959963984540054);

// ---------------------------------------------------------------------------
// Refutations and demonstrations

struct FpvnemOptions {
  bool product_only = false;  // no entangled probe anywhere
};

/// Entropy-meter outcome "0" on the first factor of C^d (x) C^d.
Certificate fpvnem_refutation(int d, int m, std::size_t samples, RandomStream& rng,
                              const FpvnemOptions& options = {});

struct SpodUpdateOptions {
  std::optional<Matrix> element;  // |0><0| on a qubit when absent
  std::size_t calls = 100;
};

Certificate spod_update_refutation(RandomStream& rng, const SpodUpdateOptions& options = {});

/// Named two-qubit inputs: "bell", "product", "partial" (weights 0.36/0.64).
PureState no_signalling_state(std::string_view name);

/// Entropy meter on factor 0 before and after a projective measurement of
/// factor 1 in the Schmidt basis of the input.
Certificate no_signalling_demo(const PureState& state, RandomStream& rng);

struct CloningOptions {
  std::optional<int> precision;
  std::size_t trials = 100;
  double required_fraction = 0.95;  // finite precision only
};

/// Reads out psi and prepares the leading eigenvector of the description.
/// Empty when an infinite-precision readout of a pure input is not rank one
/// at 1e-9.
std::optional<PureState> clone_via_readout(const PureState& psi, std::optional<int> precision);

Certificate cloning_demo(int d, RandomStream& rng, const CloningOptions& options = {});

/// Copy-fidelity floor of the finite-precision cloning demo: 1 - 10 * 2^-m.
double cloning_threshold(int precision);

// ---------------------------------------------------------------------------
// State estimation

struct TomographyOptions {
  double criterion = 0.02;  // trace distance
  std::optional<DensityMatrix> truth;  // defaults to the source's density matrix
};

/// Qubit tomography from N shots split over the X, Y and Z settings; the
/// recorded outcomes are the +1 projectors |0>, |+>, |+i>.
EstimationReport tomography_estimate(const Ensemble& source, std::size_t shots, RandomStream& rng,
                                     const TomographyOptions& options = {});
EstimationReport tomography_estimate(const PureState& source, std::size_t shots, RandomStream& rng,
                                     const TomographyOptions& options = {});

struct ReadoutEstimationOptions {
  std::vector<int> precision_schedule;  // empty: infinite precision
  double criterion = 0.05;              // sum |p - p^e|
};

/// Draws N states from the source and reads each out. With a precision
/// schedule, one round of N draws runs per entry and the last round is the
/// estimate.
EstimationReport ensemble_estimate_readout(const Ensemble& source, std::size_t draws,
                                           RandomStream& rng,
                                           const ReadoutEstimationOptions& options = {});

struct OverlapEstimationOptions {
  std::size_t net_cap = 100000;
  double criterion = 0.05;
};

/// Points of the Fibonacci net used at resolution epsilon, as Bloch vectors.
std::vector<Eigen::Vector3d> overlap_net(double epsilon);

EstimationReport ensemble_estimate_overlap(const Ensemble& source,
                                           const std::vector<double>& epsilon_schedule,
                                           std::size_t draws, RandomStream& rng,
                                           const OverlapEstimationOptions& options = {});

/// sum_i |p_i - p_i^e| after matching estimated members to source members
/// whose ray lies within `tol` (max-abs, phase aligned); unmatched estimated
/// weight counts in full.
double ensemble_distance(const Ensemble& source, const std::vector<EstimatedMember>& estimate,
                         double tol);

/// No estimated member of `a` shares a ray (within tol) with one of `b`.
bool supports_disjoint(const std::vector<EstimatedMember>& a, const std::vector<EstimatedMember>& b,
                       double tol);

// ---------------------------------------------------------------------------
// Repetition harness

/// Runs `trial(index, rng)` for every index in [0, trials), each with
/// RandomStream(seed, {stream_tag(experiment), index}), on up to `threads`
/// workers (0: hardware concurrency). Results are returned in index order.
template <typename Result>
std::vector<Result> run_trials(std::string_view experiment, std::uint64_t seed, std::size_t trials,
                               const std::function<Result(std::size_t, RandomStream&)>& trial,
                               unsigned threads = 0) {
  std::vector<std::optional<Result>> slots(trials);
  const std::uint64_t tag = stream_tag(experiment);
  std::vector<std::exception_ptr> errors(trials);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < trials; i += stride) {
      try {
        RandomStream rng(seed, StreamId{tag, i});
        slots[i].emplace(trial(i, rng));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, trials));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(trials);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace pqsim
