#pragma once

#include <cstdint>
#include <random>

namespace v2x {

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions are implemented here instead of using
/// <random>'s, whose algorithms differ between standard libraries, so a seed
/// produces the same draws on every toolchain:
///   - uniform: top 53 bits of one engine word
///   - normal: Marsaglia polar method
///   - gamma: Marsaglia-Tsang squeeze (shape < 1 via the u^(1/a) boost)
///   - beta: X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b)
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream, purpose), mixed with splitmix64.
  static Rng stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [lo, hi], unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double gamma(double shape);
  double beta(double a, double b);

private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; used to derive well-separated seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace v2x
