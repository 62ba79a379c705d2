#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ecgforge {

/// Deterministic random source. The generator is std::mt19937_64; all
/// distribution transforms are implemented here explicitly so that streams
/// are bit-identical across standard libraries, which the reproducibility
/// contract depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive, bias-free via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller; pairs are cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derives an independent stream for (this seed, stream index).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);
  static Rng forked(std::uint64_t seed, std::uint64_t stream) { return Rng(mix(seed, stream)); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
      std::int64_t j = uniform_int(0, i);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  /// Deterministic permutation of {0, ..., n-1}.
  std::vector<std::int64_t> permutation(std::int64_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ecgforge
