#pragma once

#include <cmath>
#include <cstdint>

namespace parfilter {

// Counter-based random streams. Every (seed, replicate, stream) triple owns
// an independent sequence, so simulation replicates can run in parallel and
// still draw bit-identical numbers regardless of scheduling order.
struct PhiloxBlock {
  std::uint64_t w[4];
};

// Philox 4x64 keyed permutation, 10 rounds (the standard counter-based
// generator of Salmon et al.); statistically validated in the test suite.
inline PhiloxBlock philox4x64(std::uint64_t k0, std::uint64_t k1, PhiloxBlock ctr) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 prod0 = static_cast<unsigned __int128>(kMul0) * ctr.w[0];
    const unsigned __int128 prod1 = static_cast<unsigned __int128>(kMul1) * ctr.w[2];
    const std::uint64_t hi0 = static_cast<std::uint64_t>(prod0 >> 64);
    const std::uint64_t lo0 = static_cast<std::uint64_t>(prod0);
    const std::uint64_t hi1 = static_cast<std::uint64_t>(prod1 >> 64);
    const std::uint64_t lo1 = static_cast<std::uint64_t>(prod1);
    ctr = PhiloxBlock{{hi1 ^ ctr.w[1] ^ k0, lo1, hi0 ^ ctr.w[3] ^ k1, lo0}};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream)
      : key0_(seed), key1_(stream), replicate_(replicate) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      block_ = philox4x64(key0_, key1_, PhiloxBlock{{replicate_, block_index_++, 0, 0}});
      pos_ = 0;
    }
    return block_.w[pos_++];
  }

  // Uniform draw in the open interval (0,1): never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; no rejection loop, so the draw count per
  // call is fixed. The paired value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform index in {0, ..., size-1}.
  std::size_t index(std::size_t size) {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(size));
    return k < size ? k : size - 1;
  }

 private:
  std::uint64_t key0_ = 0;
  std::uint64_t key1_ = 0;
  std::uint64_t replicate_ = 0;
  std::uint64_t block_index_ = 0;
  PhiloxBlock block_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace parfilter
