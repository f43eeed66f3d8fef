#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string_view>

namespace mfregret {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Derives an independent stream key from a parent key, a named role and
// integer coordinates, e.g. derive_key(seed, "onpgd-noise", {trial, particle, step}).
constexpr std::uint64_t derive_key(std::uint64_t parent, std::string_view tag,
                                   std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t k = mix64(parent ^ mix64(hash_tag(tag)));
  for (std::uint64_t c : coords) k = mix64(k + kGolden * (c + 1));
  return k;
}

// Counter-based generator (SplitMix64). Cheap to construct, so every
// (trial, particle, step) coordinate can own a fresh stream.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return mix64(state_);
  }

  double normal() { return normal_(*this); }
  double uniform() { return uniform_(*this); }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mfregret
