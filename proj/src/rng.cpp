#include "igeom/rng.hpp"

namespace igeom {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(splitmix64(root) ^ splitmix64(index ^ 0x5851f42d4c957f2dULL));
}

double Rng::noncentral_chi_square(double dof, double noncentrality) {
  // Poisson mixture of central chi-squares.
  long n = 0;
  if (noncentrality > 0.0) {
    n = std::poisson_distribution<long>(0.5 * noncentrality)(engine_);
  }
  const double shape = 0.5 * dof + static_cast<double>(n);
  return std::gamma_distribution<double>(shape, 2.0)(engine_);
}

}  // namespace igeom
