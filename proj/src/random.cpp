#include "pqsim/random.hpp"

#include <cmath>
#include <numbers>

#include "pqsim/error.hpp"

namespace pqsim {

namespace {

constexpr double kNeverSelected = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, StreamId id) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed),          hi(seed),          lo(id.experiment),
                    hi(id.experiment), lo(id.trial),      hi(id.trial)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomStream::RandomStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id), engine_(make_engine(seed, id)) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RandomStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w >= kNeverSelected) total += w;
  }
  if (!(total > 0.0)) throw ContractViolation("categorical: no selectable outcome");

  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < kNeverSelected) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

RandomStream RandomStream::derive(std::uint64_t branch) const {
  const std::uint64_t child_seed = splitmix64(seed_ ^ splitmix64(id_.experiment) ^
                                              splitmix64(id_.trial + 0x632BE59BD9B4E019ULL));
  return RandomStream(child_seed, StreamId{id_.experiment, branch});
}

}  // namespace pqsim
