#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace judgekit {

// FNV-1a over raw bytes. Used for request keys, provenance hashes and
// per-sample rng keying; must stay stable across releases because cache
// entries and shipped seeds depend on it.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 14695981039346656037ULL);

std::string hex64(std::uint64_t value);

// xoshiro256** seeded through splitmix64. std:: engines/distributions are
// implementation-defined, and selection draws must replay identically on
// any platform, so the generator and the draws are fixed here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double();

  // Uniform in [0, n); n must be > 0. Unbiased via rejection.
  std::uint64_t bounded(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[bounded(i)]);
    }
  }

 private:
  std::uint64_t state_[4];
};

// Deterministic per-sample stream: mixes the run seed into the hash of the
// sample id so two samples never share a stream and reruns replay exactly.
Rng rng_for_sample(std::string_view sample_id, std::uint64_t seed);

}  // namespace judgekit
