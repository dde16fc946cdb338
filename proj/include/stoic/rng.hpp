#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "stoic/tensor.hpp"

namespace stoic {

// Counter-based generator: draw k of a stream with key K is
//
//   splitmix64_mix(K + (k + 1) * 0x9E3779B97F4A7C15)
//
// i.e. exactly the SplitMix64 sequence started from state K. The output is a
// pure function of (key, counter), so results are bit-identical on every
// platform. Substreams hash a purpose label into a new key; adding a sampling
// site never perturbs draws made elsewhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x5354'4F49'4321'0001ULL)) {}
  RngStream(std::uint64_t seed, std::string_view label) : RngStream(seed) {
    key_ = derive(key_, label);
  }

  // Independent stream for a named purpose. Does not advance this stream.
  RngStream substream(std::string_view label) const;
  RngStream substream(std::uint64_t index) const;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return mix(key_ + (++counter_) * kGamma); }
  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() noexcept;
  // Standard normal via Box-Muller; pairs are consumed in order.
  double normal() noexcept;
  // Standard logistic: ln u - ln(1 - u).
  double logistic() noexcept;
  // Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  Tensor normal_tensor(std::size_t rows, std::size_t cols);
  Tensor logistic_tensor(std::size_t rows, std::size_t cols);

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static std::uint64_t derive(std::uint64_t key, std::string_view label) noexcept;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace stoic
