#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "igeom/flowline.hpp"

namespace igeom {

namespace {

double cross(Point a, Point b) { return a.real() * b.imag() - a.imag() * b.real(); }

double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

double typical_segment(std::span<const Point> pts) {
  double total = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) total += std::abs(pts[k] - pts[k - 1]);
  return pts.size() > 1 ? total / static_cast<double>(pts.size() - 1) : 0.0;
}

}  // namespace

std::optional<Crossing> segment_crossing(Point p1, Point p2, Point q1, Point q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (!((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0))) return std::nullopt;
  if (!((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return std::nullopt;
  Crossing c;
  c.paramA = d1 / (d1 - d2);
  c.paramB = d3 / (d3 - d4);
  c.point = p1 + c.paramA * (p2 - p1);
  return c;
}

double point_segment_distance(Point p, Point s0, Point s1) {
  const Point d = s1 - s0;
  const double len2 = std::norm(d);
  if (len2 == 0.0) return std::abs(p - s0);
  const double t = std::clamp(((p - s0) * std::conj(d)).real() / len2, 0.0, 1.0);
  return std::abs(p - (s0 + t * d));
}

// ---------------------------------------------------------------------------
// Bucket grid over segments or points

PolylineIndex::PolylineIndex(std::span<const Point> pts, double cell, bool asPoints)
    : pts_(pts.begin(), pts.end()), asPoints_(asPoints), cell_(cell), x0_(0), y0_(0), nx_(1), ny_(1) {
  if (pts_.empty()) return;
  double xmin = pts_[0].real(), xmax = xmin, ymin = pts_[0].imag(), ymax = ymin;
  for (const Point& p : pts_) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  if (!(cell_ > 0.0)) cell_ = 2.0 * typical_segment(pts_);
  const double extent = std::max(xmax - xmin, ymax - ymin);
  if (!(cell_ > 0.0)) cell_ = extent > 0.0 ? extent / 64.0 : 1.0;
  cell_ = std::max(cell_, extent / 1024.0);
  x0_ = xmin;
  y0_ = ymin;
  nx_ = static_cast<long>((xmax - xmin) / cell_) + 1;
  ny_ = static_cast<long>((ymax - ymin) / cell_) + 1;
  buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (std::size_t e = 0; e < element_count(); ++e) {
    const Point a = pts_[e];
    const Point b = asPoints_ ? a : pts_[e + 1];
    const long i0 = static_cast<long>((std::min(a.real(), b.real()) - x0_) / cell_);
    const long i1 = static_cast<long>((std::max(a.real(), b.real()) - x0_) / cell_);
    const long j0 = static_cast<long>((std::min(a.imag(), b.imag()) - y0_) / cell_);
    const long j1 = static_cast<long>((std::max(a.imag(), b.imag()) - y0_) / cell_);
    for (long j = j0; j <= std::min(j1, ny_ - 1); ++j) {
      for (long i = i0; i <= std::min(i1, nx_ - 1); ++i) {
        buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<std::uint32_t>(e));
      }
    }
  }
}

std::size_t PolylineIndex::element_count() const {
  if (asPoints_ || pts_.size() < 2) return pts_.size();
  return pts_.size() - 1;
}

double PolylineIndex::element_distance(std::size_t e, Point p) const {
  if (asPoints_ || pts_.size() < 2) return std::abs(p - pts_[e]);
  return point_segment_distance(p, pts_[e], pts_[e + 1]);
}

double PolylineIndex::distance_within(Point p, double radius) const {
  const double inf = std::numeric_limits<double>::infinity();
  if (pts_.empty()) return inf;
  const long i0 = std::max(0L, static_cast<long>(std::floor((p.real() - radius - x0_) / cell_)));
  const long i1 = std::min(nx_ - 1, static_cast<long>(std::floor((p.real() + radius - x0_) / cell_)));
  const long j0 = std::max(0L, static_cast<long>(std::floor((p.imag() - radius - y0_) / cell_)));
  const long j1 = std::min(ny_ - 1, static_cast<long>(std::floor((p.imag() + radius - y0_) / cell_)));
  double best = inf;
  for (long j = j0; j <= j1; ++j) {
    for (long i = i0; i <= i1; ++i) {
      for (std::uint32_t e : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
        best = std::min(best, element_distance(e, p));
      }
    }
  }
  return best <= radius ? best : inf;
}

void PolylineIndex::candidates(Point lo, Point hi, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (pts_.empty()) return;
  const long i0 = std::max(0L, static_cast<long>(std::floor((lo.real() - x0_) / cell_)));
  const long i1 = std::min(nx_ - 1, static_cast<long>(std::floor((hi.real() - x0_) / cell_)));
  const long j0 = std::max(0L, static_cast<long>(std::floor((lo.imag() - y0_) / cell_)));
  const long j1 = std::min(ny_ - 1, static_cast<long>(std::floor((hi.imag() - y0_) / cell_)));
  for (long j = j0; j <= j1; ++j) {
    for (long i = i0; i <= i1; ++i) {
      const auto& bucket = buckets_[static_cast<std::size_t>(j * nx_ + i)];
      out.insert(out.end(), bucket.begin(), bucket.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

double PolylineIndex::distance(Point p) const {
  if (pts_.empty()) return std::numeric_limits<double>::infinity();
  const double span = cell_ * static_cast<double>(std::max(nx_, ny_) + 1);
  const double far = span + std::abs(p - Point{x0_, y0_});
  for (double r = cell_; ; r *= 2.0) {
    const double d = distance_within(p, std::min(r, far));
    if (std::isfinite(d)) return d;
    if (r >= far) break;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < element_count(); ++e) best = std::min(best, element_distance(e, p));
  return best;
}

// ---------------------------------------------------------------------------
// Crossings and merging

std::vector<Crossing> detect_crossings(std::span<const Point> a, std::span<const Point> b) {
  std::vector<Crossing> out;
  if (a.size() < 2 || b.size() < 2) return out;
  const double cell = std::max(typical_segment(a), typical_segment(b)) * 2.0;
  const PolylineIndex index(b, cell);
  std::vector<std::uint32_t> cand;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const Point p1 = a[i];
    const Point p2 = a[i + 1];
    index.candidates({std::min(p1.real(), p2.real()), std::min(p1.imag(), p2.imag())},
                     {std::max(p1.real(), p2.real()), std::max(p1.imag(), p2.imag())}, cand);
    std::vector<Crossing> local;
    for (std::uint32_t j : cand) {
      if (auto c = segment_crossing(p1, p2, b[j], b[j + 1])) {
        c->segmentA = i;
        c->segmentB = j;
        c->paramA += static_cast<double>(i);
        c->paramB += static_cast<double>(j);
        local.push_back(*c);
      }
    }
    std::sort(local.begin(), local.end(),
              [](const Crossing& x, const Crossing& y) { return x.paramA < y.paramA; });
    out.insert(out.end(), local.begin(), local.end());
  }
  return out;
}

std::optional<Crossing> detect_first_crossing(std::span<const Point> a, std::span<const Point> b) {
  const auto all = detect_crossings(a, b);
  if (all.empty()) return std::nullopt;
  return all.front();
}

std::optional<Crossing> detect_first_crossing(const FlowPath& a, const FlowPath& b) {
  return detect_first_crossing(std::span<const Point>(a.points), std::span<const Point>(b.points));
}

std::optional<std::size_t> detect_merge(std::span<const Point> a, std::span<const Point> b,
                                        double eps) {
  if (!(eps > 0.0)) throw ParameterError("eps: must be positive");
  if (a.empty() || b.empty()) return std::nullopt;
  const PolylineIndex index(b, std::max(eps, 2.0 * typical_segment(b)));
  std::size_t k = a.size();
  while (k > 0 && std::isfinite(index.distance_within(a[k - 1], eps))) --k;
  if (k == a.size()) return std::nullopt;
  return k;
}

std::optional<std::size_t> detect_merge(const FlowPath& a, const FlowPath& b, double eps) {
  return detect_merge(std::span<const Point>(a.points), std::span<const Point>(b.points), eps);
}

double directed_hausdorff(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty()) return 0.0;
  const PolylineIndex index(b);
  double worst = 0.0;
  for (const Point& p : a) worst = std::max(worst, index.distance(p));
  return worst;
}

double directed_hausdorff_to_points(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty()) return 0.0;
  const PolylineIndex index(b, 0.0, true);
  double worst = 0.0;
  for (const Point& p : a) worst = std::max(worst, index.distance(p));
  return worst;
}

double min_distance(std::span<const Point> a, std::span<const Point> b) {
  const PolylineIndex index(b);
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : a) best = std::min(best, index.distance(p));
  return best;
}

double cell_coverage(const TriangulatedGrid& grid, std::span<const FlowPath> paths) {
  const int m = grid.n() - 1;
  std::vector<char> hit(static_cast<std::size_t>(m) * m, 0);
  auto mark = [&](Point p) {
    const int i = std::clamp(static_cast<int>(std::floor((p.real() - grid.x_min()) / grid.spacing())), 0, m - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.imag() - grid.y_min()) / grid.spacing())), 0, m - 1);
    hit[static_cast<std::size_t>(j) * m + i] = 1;
  };
  for (const FlowPath& path : paths) {
    for (std::size_t k = 0; k < path.points.size(); ++k) {
      mark(path.points[k]);
      if (k > 0) mark(0.5 * (path.points[k] + path.points[k - 1]));
    }
  }
  const auto covered = std::count(hit.begin(), hit.end(), 1);
  return static_cast<double>(covered) / static_cast<double>(hit.size());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

void write_rows(std::ostream& out, const FlowPath& p) {
  for (std::size_t k = 0; k < p.points.size(); ++k) {
    out << static_cast<double>(k) * p.step << ',' << p.points[k].real() << ','
        << p.points[k].imag() << ',' << (k < p.thetas.size() ? p.thetas[k] : 0.0) << '\n';
  }
}

}  // namespace

void write_path_csv(const std::filesystem::path& path, const FlowPath& p) {
  auto out = open_out(path);
  out << "t,x,y,theta\n";
  write_rows(out, p);
}

void write_paths_csv(const std::filesystem::path& path, std::span<const FlowPath> paths) {
  auto out = open_out(path);
  out << "t,x,y,theta\n";
  for (const FlowPath& p : paths) write_rows(out, p);
}

FlowPath read_path_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,x,y,theta", 0) != 0) throw std::runtime_error(path.string() + ": bad header");
  FlowPath p;
  std::vector<double> ts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, x, y, th;
    if (!(row >> t >> x >> y >> th)) throw std::runtime_error(path.string() + ": bad row");
    ts.push_back(t);
    p.points.emplace_back(x, y);
    p.thetas.push_back(th);
  }
  if (ts.size() > 1) p.step = ts[1] - ts[0];
  if (!p.thetas.empty()) p.schedule = AngleSchedule::single(p.thetas.front());
  return p;
}

std::vector<FlowPath> read_paths_csv(const std::filesystem::path& path) {
  const FlowPath all = read_path_csv(path);
  std::vector<FlowPath> out;
  // A new path starts wherever t drops back to 0.
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const double t = std::stod(line.substr(0, line.find(',')));
    if (out.empty() || (t == 0.0 && !out.back().points.empty())) {
      out.emplace_back();
      out.back().step = all.step;
      out.back().schedule = AngleSchedule::single(all.thetas[k]);
    }
    out.back().points.push_back(all.points[k]);
    out.back().thetas.push_back(all.thetas[k]);
    ++k;
  }
  return out;
}

void write_light_cone_csv(const std::filesystem::path& path, const LightConeSet& cone) {
  auto out = open_out(path);
  out << "x,y,generation\n";
  for (std::size_t k = 0; k < cone.points.size(); ++k) {
    out << cone.points[k].real() << ',' << cone.points[k].imag() << ',' << cone.generation[k] << '\n';
  }
}

}  // namespace igeom
