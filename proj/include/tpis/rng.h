#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace tpis {

// Seedable generator used for every random decision in the library.
//
// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
// standard. The conversions to uniforms, indices and normals are implemented
// here rather than through <random> distributions, because the latter are
// implementation-defined and would make results differ between standard
// libraries:
//   Uniform()        top 53 bits scaled to [0, 1)
//   UniformIndex(n)  rejection sampling on the 64-bit output, no modulo bias
//   Normal()         Box-Muller, one draw per call (the sine half is dropped)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t UniformIndex(std::size_t n);

  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

  // Fisher-Yates.
  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[UniformIndex(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer over (master, stream); gives independent child seeds
// for folds, trees and repeated runs.
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t stream);

}  // namespace tpis
