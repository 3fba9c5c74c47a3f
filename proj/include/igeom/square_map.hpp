#pragma once

#include <complex>

namespace igeom {

using Point = std::complex<double>;

/// Boundary correspondence of the conformal map psi from the upper half-plane
/// onto the square [-1,1]^2 with psi(0) = -i and psi(infinity) = i.
///
/// Prevertices of the corners are -q, -1, 1, q (top-left, bottom-left,
/// bottom-right, top-right) with q = 1/k, where the modulus k is fixed by
/// K(k') = 2 K(k). Positions are evaluated through incomplete elliptic
/// integrals and Jacobi sn.
class SquareMap {
 public:
  SquareMap();

  double modulus() const { return k_; }
  double top_prevertex() const { return q_; }

  /// psi(x) for real x; +-infinity map to i.
  Point real_to_boundary(double x) const;
  /// psi^{-1}(w) for w on the boundary of [-1,1]^2; returns +infinity for w = i.
  double boundary_to_real(Point w) const;
  /// arg psi'(x): 0 on the bottom, +-pi/2 on the sides, +-pi on the top halves.
  double arg_derivative(double x) const;

  /// Counterclockwise boundary arclength in [0, 8), origin at the corner (-1,-1).
  static double arclength_of(Point w);
  static Point point_at_arclength(double s);

 private:
  double k_;
  double kp_;
  double bigK_;
  double q_;
};

}  // namespace igeom
