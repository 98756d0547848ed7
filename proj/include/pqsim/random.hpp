#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace pqsim {

/// Identifies one independent stream inside a seeded run.
struct StreamId {
  std::uint64_t experiment = 0;
  std::uint64_t trial = 0;

  bool operator==(const StreamId&) const = default;
};

/// Stable 64-bit tag for a textual experiment name (FNV-1a).
std::uint64_t stream_tag(std::string_view name);

/// Seeded pseudo-random stream. Identical (seed, id) pairs produce identical
/// sequences on every run; the engine and the variate transforms are fully
/// specified so no standard-library distribution is involved.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, StreamId id = {});

  std::uint64_t seed() const { return seed_; }
  StreamId id() const { return id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal variate (Box-Muller).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Inverse-CDF draw from unnormalized weights. Entries below 1e-12 are
  /// never selected.
  std::size_t categorical(std::span<const double> weights);

  /// Independent child stream, e.g. for one branch of a parallel checker.
  RandomStream derive(std::uint64_t branch) const;

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
};

}  // namespace pqsim
