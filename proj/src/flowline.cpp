#include "igeom/flowline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace igeom {

namespace {

double default_step(const DiscreteField& field, double step) {
  return step > 0.0 ? step : 0.5 * field.grid.spacing();
}

double default_max_len(const DiscreteField& field, double maxLen) {
  return maxLen > 0.0 ? maxLen : 10.0 * field.grid.side_length();
}

long step_count(double len, double step) {
  return std::max(0L, static_cast<long>(std::ceil(len / step - 1e-9)));
}

Point nearest_boundary_point(const TriangulatedGrid& g, Point p) {
  const double dl = p.real() - g.x_min();
  const double dr = g.x_max() - p.real();
  const double db = p.imag() - g.y_min();
  const double dt = g.y_max() - p.imag();
  const double m = std::min({dl, dr, db, dt});
  if (m == dl) return {g.x_min(), p.imag()};
  if (m == dr) return {g.x_max(), p.imag()};
  if (m == db) return {p.real(), g.y_min()};
  return {p.real(), g.y_max()};
}

void check_start(const DiscreteField& field, Point start, double theta) {
  const TriangulatedGrid& g = field.grid;
  if (!(field.chi > 0.0)) throw ParameterError("field.chi: flow lines need chi > 0");
  const double tol = 1e-12 * g.side_length();
  if (!g.contains(start, tol)) {
    std::ostringstream msg;
    msg << "start (" << start.real() << ", " << start.imag() << ") lies outside the grid";
    throw DomainError(msg.str());
  }
  if (g.distance_to_boundary(start) > tol) return;
  const Point d = std::polar(1.0, eval_pl(field, start) / field.chi + theta);
  const double eps = 1e-12;
  const bool inward = (std::abs(start.real() - g.x_min()) > tol || d.real() > eps) &&
                      (std::abs(start.real() - g.x_max()) > tol || d.real() < -eps) &&
                      (std::abs(start.imag() - g.y_min()) > tol || d.imag() > eps) &&
                      (std::abs(start.imag() - g.y_max()) > tol || d.imag() < -eps);
  if (!inward) {
    throw DegenerateStartError("start lies on the boundary and the flow direction is not inward");
  }
}

// Steps already taken before a start close to the boundary must move away.
constexpr int kArmingSteps = 8;

}  // namespace

void AngleSchedule::validate(const DerivedConstants* consts) const {
  if (angles.empty()) throw ParameterError("schedule.angles: must be non-empty");
  if (angles.size() != changeTimes.size() + 1) {
    throw ParameterError("schedule.changeTimes: need exactly one fewer entry than angles");
  }
  for (std::size_t k = 0; k < changeTimes.size(); ++k) {
    if (!(changeTimes[k] > 0.0) || (k > 0 && !(changeTimes[k] > changeTimes[k - 1]))) {
      throw ParameterError("schedule.changeTimes[" + std::to_string(k) +
                           "]: must be positive and strictly increasing");
    }
  }
  if (requireSimple) {
    if (consts == nullptr) throw ParameterError("schedule.requireSimple: constants required");
    const auto [lo, hi] = std::minmax_element(angles.begin(), angles.end());
    if (consts->chi > 0.0 && !(*hi - *lo < 2.0 * consts->lambda / consts->chi)) {
      throw ParameterError("schedule.angles: spread must stay below 2 lambda / chi");
    }
  }
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::boundaryHit: return "boundaryHit";
    case Termination::maxLength: return "maxLength";
    case Termination::mergedInto: return "mergedInto";
    case Termination::leftDomain: return "leftDomain";
  }
  return "unknown";
}

CellOccupancy::CellOccupancy(const TriangulatedGrid& grid)
    : grid_(grid), owner_(static_cast<std::size_t>(grid.n() - 1) * (grid.n() - 1), -1) {}

std::size_t CellOccupancy::cell_of(Point p) const {
  const int m = grid_.n() - 1;
  const int i = std::clamp(static_cast<int>(std::floor((p.real() - grid_.x_min()) / grid_.spacing())), 0, m - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.imag() - grid_.y_min()) / grid_.spacing())), 0, m - 1);
  return static_cast<std::size_t>(j) * m + i;
}

long CellOccupancy::owner(Point p) const { return owner_[cell_of(p)]; }

void CellOccupancy::mark_segment(Point a, Point b, long id) {
  // Quarter-cell samples so that no cell the segment passes through is skipped at a corner.
  const int k = 1 + static_cast<int>(std::ceil(4.0 * std::abs(b - a) / grid_.spacing()));
  for (int m = 0; m <= k; ++m) {
    long& o = owner_[cell_of(a + (b - a) * (static_cast<double>(m) / k))];
    if (o < 0) o = id;
  }
}

void CellOccupancy::mark(const FlowPath& path, long id) {
  if (path.points.size() == 1) mark_segment(path.points[0], path.points[0], id);
  for (std::size_t k = 1; k < path.points.size(); ++k) mark_segment(path.points[k - 1], path.points[k], id);
}

FlowPath trace_flow_line(const DiscreteField& field, Point start, double theta,
                         const TraceOptions& opts) {
  const double step = default_step(field, opts.step);
  const double maxLen = default_max_len(field, opts.maxLen);
  check_start(field, start, theta);
  const TriangulatedGrid& g = field.grid;

  FlowPath path;
  path.schedule = AngleSchedule::single(theta);
  path.step = step;
  path.points.push_back(start);
  path.thetas.push_back(theta);

  bool armed = g.distance_to_boundary(start) >= step;
  const long steps = step_count(maxLen, step);
  Point p = start;
  for (long k = 1; k <= steps; ++k) {
    const Point q = p + std::polar(step, eval_pl(field, p) / field.chi + theta);
    if (!g.contains(q, 0.0)) {
      path.termination = Termination::leftDomain;
      return path;
    }
    path.points.push_back(q);
    path.thetas.push_back(theta);
    p = q;
    const double dist = g.distance_to_boundary(q);
    if (!armed && dist >= step) armed = true;
    if (dist < step && (armed || k >= kArmingSteps)) {
      path.termination = Termination::boundaryHit;
      path.hitPoint = nearest_boundary_point(g, q);
      return path;
    }
    if (opts.stopOn != nullptr) {
      const long o = opts.stopOn->owner(q);
      if (o >= 0) {
        path.termination = Termination::mergedInto;
        path.mergedInto = o;
        return path;
      }
    }
  }
  path.termination = Termination::maxLength;
  return path;
}

FlowPath trace_flow_line(const DiscreteField& field, Point start, double theta, double step,
                         double maxLen) {
  if (!(step > 0.0)) throw ParameterError("step: must be positive");
  if (!(maxLen > 0.0)) throw ParameterError("maxLen: must be positive");
  TraceOptions o;
  o.step = step;
  o.maxLen = maxLen;
  return trace_flow_line(field, start, theta, o);
}

FlowPath trace_angle_varying(const DiscreteField& field, Point start,
                             const AngleSchedule& schedule, const TraceOptions& opts) {
  schedule.validate();
  const double step = default_step(field, opts.step);
  const double maxLen = default_max_len(field, opts.maxLen);
  const long totalSteps = step_count(maxLen, step);

  FlowPath path;
  path.schedule = schedule;
  path.step = step;
  path.points.push_back(start);
  path.thetas.push_back(schedule.angles.front());

  long done = 0;
  for (std::size_t k = 0; k < schedule.angles.size(); ++k) {
    const long boundary = k < schedule.changeTimes.size()
                              ? std::min(totalSteps, step_count(schedule.changeTimes[k], step))
                              : totalSteps;
    const long segSteps = boundary - done;
    if (segSteps <= 0) {
      if (k + 1 < schedule.angles.size()) continue;
      path.termination = Termination::maxLength;
      return path;
    }
    TraceOptions seg = opts;
    seg.step = step;
    seg.maxLen = static_cast<double>(segSteps) * step;
    FlowPath part = trace_flow_line(field, path.points.back(), schedule.angles[k], seg);
    path.points.insert(path.points.end(), part.points.begin() + 1, part.points.end());
    path.thetas.insert(path.thetas.end(), part.thetas.begin() + 1, part.thetas.end());
    done += static_cast<long>(part.points.size()) - 1;
    path.termination = part.termination;
    path.hitPoint = part.hitPoint;
    path.mergedInto = part.mergedInto;
    if (part.termination != Termination::maxLength) return path;
    if (done >= totalSteps) return path;
  }
  return path;
}

FlowPath trace_angle_varying(const DiscreteField& field, Point start,
                             const AngleSchedule& schedule, double step, double maxLen) {
  if (!(step > 0.0)) throw ParameterError("step: must be positive");
  if (!(maxLen > 0.0)) throw ParameterError("maxLen: must be positive");
  TraceOptions o;
  o.step = step;
  o.maxLen = maxLen;
  return trace_angle_varying(field, start, schedule, o);
}

LightConeSet light_cone(const DiscreteField& field, Point start, const LightConeOptions& opts) {
  if (opts.iterations < 1) throw ParameterError("iterations: must be at least 1");
  if (opts.seedEvery < 1) throw ParameterError("seedEvery: must be at least 1");
  const double step = default_step(field, opts.step);
  const double half = 0.5 * kPi;
  const double offset = opts.sideOffset * field.grid.spacing();

  LightConeSet cone;
  CellOccupancy up(field.grid);    // paths of angle +pi/2
  CellOccupancy down(field.grid);  // paths of angle -pi/2
  auto occupancy = [&](double theta) -> CellOccupancy& { return theta > 0 ? up : down; };
  auto add = [&](FlowPath&& p, int gen) {
    const long id = static_cast<long>(cone.paths.size());
    occupancy(p.thetas.front()).mark(p, id);
    for (const Point& q : p.points) {
      cone.points.push_back(q);
      cone.generation.push_back(gen);
    }
    cone.paths.push_back(std::move(p));
    cone.pathGeneration.push_back(gen);
    return static_cast<std::size_t>(id);
  };

  TraceOptions base;
  base.step = step;
  base.maxLen = opts.maxLen;
  std::vector<std::size_t> prev;
  prev.push_back(add(trace_flow_line(field, start, half, base), 0));
  prev.push_back(add(trace_flow_line(field, start, -half, base), 0));
  // Close the gaps between the outer boundaries and the domain edge at both ends.
  const Point foot = nearest_boundary_point(field.grid, start);
  for (std::size_t id : prev) {
    const FlowPath& p = cone.paths[id];
    for (CellOccupancy* occ : {&up, &down}) {
      occ->mark_segment(start, foot, static_cast<long>(id));
      if (p.termination == Termination::boundaryHit) occ->mark_segment(p.points.back(), p.hitPoint, static_cast<long>(id));
    }
  }

  for (int gen = 1; gen < opts.iterations && !prev.empty(); ++gen) {
    std::vector<std::size_t> next;
    for (const std::size_t parent : prev) {
      const double theta = -cone.paths[parent].thetas.front();
      const std::size_t count = cone.paths[parent].points.size();
      for (std::size_t v = static_cast<std::size_t>(opts.seedEvery); v < count;
           v += static_cast<std::size_t>(opts.seedEvery)) {
        if (cone.paths.size() >= opts.maxPaths) break;
        // A turn by -pi starts just right of the parent, a turn by +pi just left.
        const auto& pts = cone.paths[parent].points;
        const Point tangent = pts[std::min(v + 1, count - 1)] - pts[v - 1];
        const Point side = theta < 0 ? Point{0.0, -1.0} : Point{0.0, 1.0};
        const Point seed = pts[v] + offset * side * tangent / std::abs(tangent);
        if (!field.grid.contains(seed, 0.0) || field.grid.distance_to_boundary(seed) < step) continue;
        TraceOptions o = base;
        o.stopOn = &occupancy(theta);
        FlowPath p = trace_flow_line(field, seed, theta, o);
        if (p.points.size() < 2) continue;
        next.push_back(add(std::move(p), gen));
      }
    }
    prev = std::move(next);
  }
  return cone;
}

LightConeSet light_cone(const DiscreteField& field, Point start, int iterations, double step) {
  LightConeOptions o;
  o.iterations = iterations;
  o.step = step;
  return light_cone(field, start, o);
}

std::vector<double> fan_angles(int angleCount) {
  if (angleCount < 2) throw ParameterError("angleCount: must be at least 2");
  std::vector<double> out(static_cast<std::size_t>(angleCount));
  for (int j = 0; j < angleCount; ++j) out[j] = -0.5 * kPi + j * kPi / (angleCount - 1);
  return out;
}

std::vector<FlowPath> fan(const DiscreteField& field, Point start, int angleCount,
                          const TraceOptions& opts) {
  std::vector<FlowPath> out;
  for (double theta : fan_angles(angleCount)) out.push_back(trace_flow_line(field, start, theta, opts));
  return out;
}

}  // namespace igeom
