#include "igeom/square_map.hpp"

#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/jacobi_elliptic.hpp>

#include <cmath>
#include <limits>

#include "igeom/core.hpp"

namespace igeom {

namespace bm = boost::math;

namespace {

double solve_modulus() {
  // K(sqrt(1-k^2)) - 2 K(k) is decreasing in k.
  double lo = 1e-6;
  double hi = 0.999;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = bm::ellint_1(std::sqrt(1.0 - mid * mid)) - 2.0 * bm::ellint_1(mid);
    if (f > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SquareMap::SquareMap()
    : k_(solve_modulus()),
      kp_(std::sqrt(1.0 - k_ * k_)),
      bigK_(bm::ellint_1(k_)),
      q_(1.0 / k_) {}

Point SquareMap::real_to_boundary(double x) const {
  if (std::isinf(x)) return {0.0, 1.0};
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double a = std::abs(x);
  if (a <= 1.0) {
    const double u = bm::ellint_1(k_, std::asin(a)) / bigK_;
    return {sign * u, -1.0};
  }
  if (a <= q_) {
    const double s2 = std::min(1.0, (1.0 - 1.0 / (a * a)) / (kp_ * kp_));
    const double v = bm::ellint_1(kp_, std::asin(std::sqrt(s2))) / bigK_ - 1.0;
    return {sign, v};
  }
  const double u = bm::ellint_1(k_, std::asin(q_ / a)) / bigK_;
  return {sign * u, 1.0};
}

double SquareMap::boundary_to_real(Point w) const {
  constexpr double tol = 1e-9;
  const double x = w.real();
  const double y = w.imag();
  if (std::abs(y + 1.0) <= tol) {
    const double sn = bm::jacobi_sn(k_, std::abs(x) * bigK_);
    return std::copysign(sn, x);
  }
  if (std::abs(y - 1.0) <= tol) {
    const double sn = bm::jacobi_sn(k_, std::abs(x) * bigK_);
    if (sn <= 0.0) return std::numeric_limits<double>::infinity();
    return std::copysign(q_ / sn, x);
  }
  if (std::abs(std::abs(x) - 1.0) <= tol) {
    const double sn = bm::jacobi_sn(kp_, (1.0 + y) * bigK_);
    const double r = 1.0 / std::sqrt(std::max(1.0 - kp_ * kp_ * sn * sn, 0.0));
    return std::copysign(r, x);
  }
  throw DomainError("SquareMap::boundary_to_real: point is not on the square boundary");
}

double SquareMap::arg_derivative(double x) const {
  const double a = std::abs(x);
  if (a < 1.0) return 0.0;
  if (a < q_) return std::copysign(0.5 * kPi, x);
  return std::copysign(kPi, x);
}

double SquareMap::arclength_of(Point w) {
  constexpr double tol = 1e-9;
  const double x = w.real();
  const double y = w.imag();
  if (std::abs(y + 1.0) <= tol && x < 1.0 - tol) return x + 1.0;
  if (std::abs(x - 1.0) <= tol && y < 1.0 - tol) return 3.0 + y;
  if (std::abs(y - 1.0) <= tol && x > -1.0 + tol) return 5.0 - x;
  if (std::abs(x + 1.0) <= tol) return 7.0 - y;
  throw DomainError("SquareMap::arclength_of: point is not on the square boundary");
}

Point SquareMap::point_at_arclength(double s) {
  s = std::fmod(s, 8.0);
  if (s < 0.0) s += 8.0;
  if (s < 2.0) return {s - 1.0, -1.0};
  if (s < 4.0) return {1.0, s - 3.0};
  if (s < 6.0) return {5.0 - s, 1.0};
  return {-1.0, 7.0 - s};
}

}  // namespace igeom
