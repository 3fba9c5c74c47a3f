#include "igeom/gff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace igeom {

static_assert(std::endian::native == std::endian::little, "field files assume little-endian hosts");

// ---------------------------------------------------------------------------
// TriangulatedGrid

TriangulatedGrid::TriangulatedGrid(int n, double sideLength, Point center)
    : n_(n), spacing_(0.0), center_(center) {
  if (n < 3) throw ParameterError("grid.n: need at least 3 vertices per side");
  if (!(sideLength > 0.0)) throw ParameterError("grid.sideLength: must be positive");
  spacing_ = sideLength / (n - 1);
  boundary_.reserve(4 * static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n - 1; ++i) boundary_.push_back(index(i, 0));
  for (int j = 0; j < n - 1; ++j) boundary_.push_back(index(n - 1, j));
  for (int i = n - 1; i > 0; --i) boundary_.push_back(index(i, n - 1));
  for (int j = n - 1; j > 0; --j) boundary_.push_back(index(0, j));
}

bool TriangulatedGrid::contains(Point p, double tol) const {
  return p.real() >= x_min() - tol && p.real() <= x_max() + tol && p.imag() >= y_min() - tol &&
         p.imag() <= y_max() + tol;
}

double TriangulatedGrid::distance_to_boundary(Point p) const {
  return std::min({p.real() - x_min(), x_max() - p.real(), p.imag() - y_min(),
                   y_max() - p.imag()});
}

// ---------------------------------------------------------------------------
// BoundaryTrace

BoundaryTrace BoundaryTrace::constant(const TriangulatedGrid& grid, double value) {
  BoundaryTrace t;
  t.orderedBoundaryVertices = grid.boundary_vertices();
  t.values.assign(t.orderedBoundaryVertices.size(), value);
  return t;
}

BoundaryTrace BoundaryTrace::from_arcs(const TriangulatedGrid& grid, std::span<const Arc> arcs) {
  BoundaryTrace t = constant(grid, 0.0);
  const std::size_t m = t.values.size();
  for (const Arc& a : arcs) {
    if (a.fromIndex >= m || a.toIndex >= m) {
      throw ParameterError("boundary arc: index outside the boundary ordering");
    }
    std::size_t k = a.fromIndex;
    while (true) {
      t.values[k] = a.value;
      if (k == a.toIndex) break;
      k = (k + 1) % m;
    }
  }
  return t;
}

std::vector<BoundaryTrace::Arc> BoundaryTrace::arcs() const {
  std::vector<Arc> out;
  const std::size_t m = values.size();
  if (m == 0) return out;
  // Start at a position where the value changes so runs do not wrap.
  std::size_t start = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (values[k] != values[(k + m - 1) % m]) {
      start = k;
      break;
    }
  }
  Arc cur{start, start, values[start]};
  for (std::size_t step = 1; step < m; ++step) {
    const std::size_t k = (start + step) % m;
    if (values[k] == cur.value) {
      cur.toIndex = k;
    } else {
      out.push_back(cur);
      cur = Arc{k, k, values[k]};
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// DirichletOperator

DirichletOperator::DirichletOperator(const TriangulatedGrid& grid)
    : grid_(grid), interiorSlot_(grid.vertex_count(), -1) {
  const int n = grid.n();
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      interiorSlot_[grid.index(i, j)] = static_cast<long>(interior_.size());
      interior_.push_back(grid.index(i, j));
    }
  }
  const auto m = static_cast<Eigen::Index>(interior_.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(5 * interior_.size());
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const long row = interiorSlot_[grid.index(i, j)];
      triplets.emplace_back(row, row, 4.0);
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        const long col = interiorSlot_[grid.index(i + di[d], j + dj[d])];
        if (col >= 0) triplets.emplace_back(row, col, -1.0);
      }
    }
  }
  laplacian_.resize(m, m);
  laplacian_.setFromTriplets(triplets.begin(), triplets.end());
  factor_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(laplacian_);
  if (factor_->info() != Eigen::Success) {
    throw ParameterError("grid: Dirichlet form factorization failed");
  }
}

std::vector<double> DirichletOperator::sample(Rng& rng) const {
  const auto m = static_cast<Eigen::Index>(interior_.size());
  Eigen::VectorXd z(m);
  for (Eigen::Index k = 0; k < m; ++k) z[k] = rng.normal();
  const Eigen::VectorXd y = factor_->matrixU().solve(z);
  const Eigen::VectorXd x = factor_->permutationPinv() * y;
  const double scale = std::sqrt(kCovarianceScale);
  std::vector<double> values(grid_.vertex_count(), 0.0);
  for (std::size_t k = 0; k < interior_.size(); ++k) {
    values[interior_[k]] = scale * x[static_cast<Eigen::Index>(k)];
  }
  return values;
}

std::vector<double> DirichletOperator::sample(std::uint64_t seed) const {
  Rng rng(seed);
  return sample(rng);
}

std::vector<double> DirichletOperator::harmonic_extension(const BoundaryTrace& boundary) const {
  const auto& order = grid_.boundary_vertices();
  if (boundary.values.size() != order.size()) {
    throw ParameterError("boundary: value count does not match the grid boundary");
  }
  std::vector<double> values(grid_.vertex_count(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!std::isfinite(boundary.values[k])) throw ParameterError("boundary: non-finite value");
    values[order[k]] = boundary.values[k];
  }
  const int n = grid_.n();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(interior_.size()));
  for (int j = 1; j < n - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const long row = interiorSlot_[grid_.index(i, j)];
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        const int ii = i + di[d];
        const int jj = j + dj[d];
        if (grid_.is_boundary(ii, jj)) rhs[row] += values[grid_.index(ii, jj)];
      }
    }
  }
  const Eigen::VectorXd u = factor_->solve(rhs);
  for (std::size_t k = 0; k < interior_.size(); ++k) {
    values[interior_[k]] = u[static_cast<Eigen::Index>(k)];
  }
  return values;
}

DiscreteField sample_zero_boundary_gff(const TriangulatedGrid& grid, std::uint64_t seed,
                                       double chi) {
  const DirichletOperator op(grid);
  return DiscreteField{grid, op.sample(seed), BoundaryTrace::constant(grid, 0.0), chi};
}

DiscreteField harmonic_extension(const TriangulatedGrid& grid, const BoundaryTrace& boundary,
                                 double chi) {
  const DirichletOperator op(grid);
  return DiscreteField{grid, op.harmonic_extension(boundary), boundary, chi};
}

DiscreteField sample_field(const DirichletOperator& op, std::uint64_t seed,
                           const BoundaryTrace& boundary, double chi) {
  std::vector<double> values = op.harmonic_extension(boundary);
  const std::vector<double> noise = op.sample(seed);
  for (std::size_t k = 0; k < values.size(); ++k) values[k] += noise[k];
  return DiscreteField{op.grid(), std::move(values), boundary, chi};
}

// ---------------------------------------------------------------------------
// Evaluation

double eval_pl(const DiscreteField& field, Point p) {
  const TriangulatedGrid& g = field.grid;
  if (!g.contains(p, 1e-12 * g.side_length())) {
    std::ostringstream msg;
    msg << "eval_pl: point (" << p.real() << ", " << p.imag() << ") outside the grid";
    throw DomainError(msg.str());
  }
  const int n = g.n();
  const double fx = (p.real() - g.x_min()) / g.spacing();
  const double fy = (p.imag() - g.y_min()) / g.spacing();
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, n - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, n - 2);
  const double u = fx - i;
  const double v = fy - j;
  const auto& f = field.vertexValues;
  const double f00 = f[g.index(i, j)];
  const double f11 = f[g.index(i + 1, j + 1)];
  if (u >= v) {
    const double f10 = f[g.index(i + 1, j)];
    return f00 + u * (f10 - f00) + v * (f11 - f10);
  }
  const double f01 = f[g.index(i, j + 1)];
  return f00 + v * (f01 - f00) + u * (f11 - f01);
}

// ---------------------------------------------------------------------------
// Winding

WindingRecord WindingRecord::of_polyline(std::span<const Point> pts) {
  WindingRecord w;
  for (std::size_t k = 2; k < pts.size(); ++k) {
    const Point a = pts[k - 1] - pts[k - 2];
    const Point b = pts[k] - pts[k - 1];
    if (std::abs(a) == 0.0 || std::abs(b) == 0.0) continue;
    w.cumulativeTurning += std::arg(b / a);
  }
  return w;
}

double winding_boundary_value(double base, const WindingRecord& turning, double chi) {
  return base + chi * turning.cumulativeTurning;
}

// ---------------------------------------------------------------------------
// Pullback of half-plane boundary data

double StepFunction::operator()(double x) const {
  if (values.size() != jumps.size() + 1) {
    throw ParameterError("step function: need one more value than jumps");
  }
  const auto it = std::upper_bound(jumps.begin(), jumps.end(), x);
  return values[static_cast<std::size_t>(it - jumps.begin())];
}

BoundaryTrace pullback_boundary_data(const StepFunction& halfPlane, const TriangulatedGrid& grid,
                                     double chi) {
  if (!std::is_sorted(halfPlane.jumps.begin(), halfPlane.jumps.end())) {
    throw ParameterError("step function: jumps must be sorted");
  }
  static const SquareMap map;
  constexpr double nudge = 1e-9;
  BoundaryTrace t = BoundaryTrace::constant(grid, 0.0);
  auto value_at = [&](double s) {
    const double x = map.boundary_to_real(SquareMap::point_at_arclength(s));
    return halfPlane(x) + chi * map.arg_derivative(x);
  };
  for (std::size_t k = 0; k < t.orderedBoundaryVertices.size(); ++k) {
    Point w = grid.to_unit_square(grid.vertex(t.orderedBoundaryVertices[k]));
    // Snap round-off so the point lies exactly on an edge of [-1,1]^2.
    auto snap = [](double c) { return std::abs(std::abs(c) - 1.0) < 1e-12 ? std::copysign(1.0, c) : c; };
    w = {snap(w.real()), snap(w.imag())};
    const double s = SquareMap::arclength_of(w);
    t.values[k] = 0.5 * (value_at(s - nudge) + value_at(s + nudge));
  }
  return t;
}

// ---------------------------------------------------------------------------
// File formats

void write_field_file(const std::filesystem::path& path, const DiscreteField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const char magic[4] = {'I', 'G', 'F', '1'};
  const auto n = static_cast<std::uint32_t>(field.grid.n());
  const double spacing = field.grid.spacing();
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&spacing), sizeof spacing);
  out.write(reinterpret_cast<const char*>(&field.chi), sizeof field.chi);
  out.write(reinterpret_cast<const char*>(field.vertexValues.data()),
            static_cast<std::streamsize>(field.vertexValues.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DiscreteField read_field_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  std::uint32_t n = 0;
  double spacing = 0.0;
  double chi = 0.0;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IGF1", 4) != 0) {
    throw std::runtime_error(path.string() + ": not an IGF1 field file");
  }
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&spacing), sizeof spacing);
  in.read(reinterpret_cast<char*>(&chi), sizeof chi);
  TriangulatedGrid grid(static_cast<int>(n), spacing * (n - 1));
  std::vector<double> values(grid.vertex_count());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated field file");
  BoundaryTrace boundary = BoundaryTrace::constant(grid, 0.0);
  for (std::size_t k = 0; k < boundary.values.size(); ++k) {
    boundary.values[k] = values[boundary.orderedBoundaryVertices[k]];
  }
  return DiscreteField{grid, std::move(values), std::move(boundary), chi};
}

std::string boundary_arcs_to_json(const BoundaryTrace& trace) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : trace.arcs()) {
    j.push_back({{"fromIndex", a.fromIndex}, {"toIndex", a.toIndex}, {"value", a.value}});
  }
  return j.dump(2);
}

BoundaryTrace boundary_from_json(const TriangulatedGrid& grid, const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_array()) throw ParameterError("boundary spec: expected a JSON list of arcs");
  std::vector<BoundaryTrace::Arc> arcs;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    if (!e.contains("fromIndex") || !e.contains("toIndex") || !e.contains("value")) {
      throw ParameterError("boundary spec[" + std::to_string(k) +
                           "]: needs fromIndex, toIndex and value");
    }
    arcs.push_back({e["fromIndex"].get<std::size_t>(), e["toIndex"].get<std::size_t>(),
                    e["value"].get<double>()});
  }
  return BoundaryTrace::from_arcs(grid, arcs);
}

}  // namespace igeom
