#pragma once

#include <cstdint>
#include <random>

namespace babplan {

// Deterministic random stream. std::mt19937_64 supplies the bits; the
// uniform/normal mappings are fixed here because the standard library
// distribution objects are implementation-defined and would break
// reproducibility of traces across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n);

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Per-subdomain searches run on seed ^ index so sibling boxes get
// decorrelated but reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return master ^ index;
}

// Splitmix-style mix used where adjacent seeds would be too correlated
// (e.g. one stream per planner iteration).
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt);

}  // namespace babplan
