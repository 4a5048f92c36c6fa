#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace emoreg {

// Seeded generator with portable sampling helpers. The distribution classes
// in <random> are implementation-defined, so every draw used for results goes
// through these members to keep reports byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform real in [0, 1) with 53 bits of randomness.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal(double mean = 0.0, double sd = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  // Independent child stream; children with different tags do not overlap in practice.
  Rng fork(std::uint64_t tag);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer, used to derive sub-seeds from a session seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace emoreg
