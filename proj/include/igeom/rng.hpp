#pragma once

#include <cstdint>
#include <random>

namespace igeom {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under `root`. Depends only on (root, index), so the
/// i-th Monte-Carlo run sees the same stream regardless of scheduling.
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  /// Squared-Bessel transition: dt * noncentral chi-square(delta, y / dt).
  double noncentral_chi_square(double dof, double noncentrality);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace igeom
