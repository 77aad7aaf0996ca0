#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace mentor {

/// Counter-based generator. Each value is a pure function of (key, counter),
/// so a stream can be split into named substreams without the draws of one
/// site perturbing another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent stream derived from this one's key and `name`.
  [[nodiscard]] Rng substream(std::string_view name) const;
  [[nodiscard]] Rng substream(std::uint64_t id) const;

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  struct KeyTag {};
  Rng(std::uint64_t key, KeyTag) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by `rng` (portable, unlike std::shuffle).
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// 64-bit FNV-1a, used for substream names and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace mentor
