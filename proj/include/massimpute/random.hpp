#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace massimpute::rng {

// Stream tags keep the substreams of one master seed disjoint.
enum class Stream : std::uint64_t {
  Population = 1,
  SampleA = 2,
  SampleB = 3,
  ReplicateWeights = 4,
  ReplicateRefit = 5,
  MonteCarloRep = 6,
  Bootstrap = 7,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based derivation: the result depends only on (master, stream,
// index), never on the order in which substreams are requested.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept;

// Reproducible generator. The engine is mt19937_64, whose output sequence is
// fixed by the standard; uniform/bounded/normal draws are implemented here so
// they do not depend on the standard library's distribution classes.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, bound), bound > 0. Lemire's multiply-shift with
  // rejection, so the draw is exactly uniform.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via the Box–Muller transform; the second variate of each
  // pair is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace massimpute::rng
