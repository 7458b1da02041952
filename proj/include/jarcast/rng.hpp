#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace jarcast {

// Seeded generator shared by initialization, batch sampling and the
// interpolation draws of the gradient penalty.
//
// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
// C++ standard. The conversions to uniform and normal variates are done here
// rather than through <random> distributions, which are implementation
// defined, so a seed yields the same stream on every conforming toolchain:
//   uniform()  = (bits >> 11) * 2^-53              in [0, 1)
//   normal()   = Box-Muller, cosine branch only     (two uniforms per draw)
//   below(n)   = rejection sampling on the top bits (unbiased)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t n);

  // Independent stream for a sub-task, e.g. one grid-search point.
  static Rng derive(std::uint64_t base_seed, std::uint64_t stream) {
    return Rng(base_seed ^ stream);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Fisher-Yates; std::shuffle's draw pattern is unspecified.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace jarcast
