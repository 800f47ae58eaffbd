#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace geoevo {

// SplitMix64 generator. Used everywhere randomness is needed so that runs are
// reproducible bit-for-bit across platforms; std:: distributions are
// implementation-defined and would break cross-run determinism guarantees.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = next() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// FNV-1a, for deriving seeds from string ids.
inline uint64_t hash64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Splits a seed into an independent stream keyed by `salt`. Feeding the mix
// through one SplitMix64 step decorrelates adjacent salts.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  SplitMix64 g(seed ^ (salt * 0xff51afd7ed558ccdull + 0x2545f4914f6cdd1dull));
  return g.next();
}

inline uint64_t mix_seed(uint64_t seed, std::string_view salt) {
  return mix_seed(seed, hash64(salt));
}

}  // namespace geoevo
