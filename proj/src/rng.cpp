#include "stoic/rng.hpp"

#include <cmath>
#include <numbers>

namespace stoic {

std::uint64_t RngStream::derive(std::uint64_t key, std::string_view label) noexcept {
  // FNV-1a over the label, then folded into the parent key.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix(key ^ mix(h + kGamma));
}

RngStream RngStream::substream(std::string_view label) const {
  RngStream s(*this);
  s.key_ = derive(key_, label);
  s.counter_ = 0;
  s.has_cached_ = false;
  return s;
}

RngStream RngStream::substream(std::uint64_t index) const {
  RngStream s(*this);
  s.key_ = mix(key_ ^ mix(index * kGamma + 0xA5A5A5A5ULL));
  s.counter_ = 0;
  s.has_cached_ = false;
  return s;
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

double RngStream::logistic() noexcept {
  const double u = uniform();
  return std::log(u) - std::log1p(-u);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

Tensor RngStream::normal_tensor(std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& v : t.values()) v = normal();
  return t;
}

Tensor RngStream::logistic_tensor(std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& v : t.values()) v = logistic();
  return t;
}

}  // namespace stoic
