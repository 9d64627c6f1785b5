#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace plangan {

// splitmix64 finalizer; used to derive independent stream seeds from a
// master seed and an index path.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index) {
  return MixSeed(seed ^ MixSeed(index + 0x632be59bd9b4e019ULL));
}

template <typename... Rest>
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index,
                                   Rest... rest) {
  return DeriveSeed(DeriveSeed(seed, index), static_cast<std::uint64_t>(rest)...);
}

// Seeded random stream. Distributions are constructed per draw so the whole
// stream state is the engine state, which makes Serialize/Deserialize exact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t Index(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  std::uint64_t NextSeed() { return engine_(); }

  std::string Serialize() const;
  static Rng Deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace plangan
