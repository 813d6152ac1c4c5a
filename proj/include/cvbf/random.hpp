#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cvbf/core.hpp"

namespace cvbf {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for (stream, index) under a master seed:
///   mix64(mix64(master ^ mix64(stream)) + index)
/// Streams separate independent consumers (x-splits, y-splits, replications)
/// so that seeds do not depend on execution order or thread count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(master ^ mix64(stream)) + index);
}

namespace streams {
inline constexpr std::uint64_t split_x = 0x5831;
inline constexpr std::uint64_t split_y = 0x5931;
inline constexpr std::uint64_t replication = 0x5245;
inline constexpr std::uint64_t data = 0x4441;
inline constexpr std::uint64_t mixture = 0x4d58;
inline constexpr std::uint64_t chain = 0x4348;
}  // namespace streams

/// Seeded generator. The engine's bit stream is fixed by the standard; every
/// transform on top of it is implemented here so draws are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased (Lemire's multiply-shift rejection).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw InputError("index() needs n > 0");
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Box-Muller, one variate per call.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double cauchy() { return std::tan(std::numbers::pi * (uniform() - 0.5)); }

  // Beta(1/2, 1/2) by the arcsine transform.
  double arcsine() {
    const double s = std::sin(std::numbers::pi * uniform() / 2.0);
    return s * s;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// k distinct indices from 0..n-1 by partial Fisher-Yates, in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t k,
                                                           Rng& rng) {
  if (k > n) throw InputError("cannot draw more indices than available");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  return perm;
}

/// Random split with `train_size` training points, validation = complement.
/// Both index lists are returned sorted.
inline SplitPlan random_split(std::size_t n, std::size_t train_size,
                              std::uint64_t seed) {
  if (train_size < 1 || train_size >= n) {
    throw InputError("training size must satisfy 1 <= r < " + std::to_string(n) +
                     ", got " + std::to_string(train_size));
  }
  Rng rng(seed);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_idx = sample_without_replacement(n, train_size, rng);
  std::sort(plan.train_idx.begin(), plan.train_idx.end());
  std::vector<char> in_train(n, 0);
  for (auto i : plan.train_idx) in_train[i] = 1;
  plan.valid_idx.reserve(n - train_size);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_train[i]) plan.valid_idx.push_back(i);
  }
  return plan;
}

}  // namespace cvbf
