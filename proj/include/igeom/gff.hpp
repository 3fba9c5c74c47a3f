#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "igeom/core.hpp"
#include "igeom/rng.hpp"
#include "igeom/square_map.hpp"

namespace igeom {

/// Square grid with n vertices per side; every grid square is split along the
/// diagonal from its lower-left to its upper-right corner.
///
/// Vertex (i, j) has column i (x direction) and row j (y direction) and is
/// stored at index j * n + i.
class TriangulatedGrid {
 public:
  explicit TriangulatedGrid(int n, double sideLength = 2.0, Point center = {0.0, 0.0});

  int n() const { return n_; }
  double spacing() const { return spacing_; }
  double side_length() const { return spacing_ * (n_ - 1); }
  Point center() const { return center_; }
  double x_min() const { return center_.real() - 0.5 * side_length(); }
  double y_min() const { return center_.imag() - 0.5 * side_length(); }
  double x_max() const { return center_.real() + 0.5 * side_length(); }
  double y_max() const { return center_.imag() + 0.5 * side_length(); }

  std::size_t vertex_count() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }
  Point vertex(int i, int j) const { return {x_min() + i * spacing_, y_min() + j * spacing_}; }
  Point vertex(std::size_t idx) const {
    return vertex(static_cast<int>(idx % n_), static_cast<int>(idx / n_));
  }
  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1; }

  bool contains(Point p, double tol = 1e-12) const;
  double distance_to_boundary(Point p) const;

  /// Boundary vertex indices, counterclockwise from the lower-left corner.
  const std::vector<std::size_t>& boundary_vertices() const { return boundary_; }

  /// Maps a point of the grid box affinely onto [-1,1]^2.
  Point to_unit_square(Point p) const { return (p - center_) / (0.5 * side_length()); }
  Point from_unit_square(Point u) const { return center_ + u * (0.5 * side_length()); }

 private:
  int n_;
  double spacing_;
  Point center_;
  std::vector<std::size_t> boundary_;
};

/// Values on the counterclockwise boundary ordering of a grid.
struct BoundaryTrace {
  std::vector<std::size_t> orderedBoundaryVertices;
  std::vector<double> values;

  static BoundaryTrace constant(const TriangulatedGrid& grid, double value);

  struct Arc {
    std::size_t fromIndex = 0;  // positions in the boundary ordering, inclusive
    std::size_t toIndex = 0;    // may wrap past the end of the ordering
    double value = 0.0;
  };
  /// Vertices not covered by any arc are 0; later arcs override earlier ones.
  static BoundaryTrace from_arcs(const TriangulatedGrid& grid, std::span<const Arc> arcs);
  /// Maximal cyclic runs of equal value.
  std::vector<Arc> arcs() const;
};

/// Piecewise-linear field on a triangulated grid.
struct DiscreteField {
  TriangulatedGrid grid;
  std::vector<double> vertexValues;
  BoundaryTrace boundary;
  double chi = 0.0;
};

/// Discrete Dirichlet form of the grid restricted to interior vertices,
/// factored once and reused for sampling and harmonic extension.
///
/// For this triangulation the P1 stiffness matrix is the 5-point Laplacian
/// (diagonal edges carry zero cotangent weight). With the 1/(2 pi) Dirichlet
/// inner product the zero-boundary GFF has covariance 2 pi L^{-1}.
class DirichletOperator {
 public:
  explicit DirichletOperator(const TriangulatedGrid& grid);

  const TriangulatedGrid& grid() const { return grid_; }
  std::size_t interior_count() const { return interior_.size(); }
  const std::vector<std::size_t>& interior_vertices() const { return interior_; }
  const Eigen::SparseMatrix<double>& laplacian() const { return laplacian_; }

  /// Zero-boundary GFF vertex values; boundary entries are exactly 0.
  std::vector<double> sample(Rng& rng) const;
  std::vector<double> sample(std::uint64_t seed) const;

  /// Discrete-harmonic interior with the given boundary values.
  std::vector<double> harmonic_extension(const BoundaryTrace& boundary) const;

  static constexpr double kCovarianceScale = 2.0 * kPi;

 private:
  TriangulatedGrid grid_;
  std::vector<std::size_t> interior_;
  std::vector<long> interiorSlot_;  // vertex -> interior slot or -1
  Eigen::SparseMatrix<double> laplacian_;
  std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor_;
};

DiscreteField sample_zero_boundary_gff(const TriangulatedGrid& grid, std::uint64_t seed,
                                       double chi = 0.0);
DiscreteField harmonic_extension(const TriangulatedGrid& grid, const BoundaryTrace& boundary,
                                 double chi = 0.0);
/// GFF with the given boundary data: zero-boundary sample plus harmonic extension.
DiscreteField sample_field(const DirichletOperator& op, std::uint64_t seed,
                           const BoundaryTrace& boundary, double chi);

/// Barycentric interpolation on the containing triangle. Throws DomainError
/// outside the grid box.
double eval_pl(const DiscreteField& field, Point p);

/// Cumulative signed turning of a polyline (left turns positive).
struct WindingRecord {
  double cumulativeTurning = 0.0;

  static WindingRecord of_polyline(std::span<const Point> pts);
  WindingRecord operator+(const WindingRecord& o) const {
    return {cumulativeTurning + o.cumulativeTurning};
  }
};

/// base + chi * winding: a quarter turn left raises the height by (pi/2) chi.
double winding_boundary_value(double base, const WindingRecord& turning, double chi);

/// Piecewise-constant function on the real line: values[k] holds on
/// (jumps[k-1], jumps[k]).
struct StepFunction {
  std::vector<double> jumps;
  std::vector<double> values;

  double operator()(double x) const;
  static StepFunction constant(double v) { return {{}, {v}}; }
  /// -a on the negative axis, b on the positive axis.
  static StepFunction two_sided(double a, double b) { return {{0.0}, {-a, b}}; }
};

/// Boundary data on the grid square obtained from half-plane boundary data by
/// the coordinate change h o psi^{-1} - chi arg (psi^{-1})', where psi maps the
/// half-plane onto the square with 0 -> -i and infinity -> i. Vertices at a
/// discontinuity get the mean of the one-sided limits.
BoundaryTrace pullback_boundary_data(const StepFunction& halfPlane, const TriangulatedGrid& grid,
                                     double chi);

// Field file: magic "IGF1", u32 n, f64 spacing, f64 chi, then n*n row-major f64
// values, little-endian. The grid box is centered at the origin.
void write_field_file(const std::filesystem::path& path, const DiscreteField& field);
DiscreteField read_field_file(const std::filesystem::path& path);

// Boundary spec: JSON list of {fromIndex, toIndex, value}.
std::string boundary_arcs_to_json(const BoundaryTrace& trace);
BoundaryTrace boundary_from_json(const TriangulatedGrid& grid, const std::string& json);

}  // namespace igeom
