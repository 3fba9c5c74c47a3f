#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "igeom/core.hpp"
#include "igeom/gff.hpp"

namespace igeom {

/// Piecewise-constant angle as a function of arclength: angles[k] is used on
/// [changeTimes[k-1], changeTimes[k]).
struct AngleSchedule {
  std::vector<double> angles;
  std::vector<double> changeTimes;
  bool requireSimple = false;  // max |theta_i - theta_j| < 2 lambda / chi

  static AngleSchedule single(double theta) { return {{theta}, {}, false}; }

  /// Throws ParameterError; the simplicity check needs the constants.
  void validate(const DerivedConstants* consts = nullptr) const;
};

enum class Termination { boundaryHit, maxLength, mergedInto, leftDomain };

const char* termination_name(Termination t);

struct FlowPath {
  std::vector<Point> points;
  std::vector<double> thetas;  // angle used to reach each point; thetas[0] is the first angle
  AngleSchedule schedule;
  double step = 0.0;
  Termination termination = Termination::maxLength;
  Point hitPoint{0.0, 0.0};  // nearest boundary point when termination == boundaryHit
  long mergedInto = -1;      // path id when termination == mergedInto

  double length() const { return step * static_cast<double>(points.empty() ? 0 : points.size() - 1); }
};

/// Cells of the grid that earlier paths visited, keyed by path id. Used to stop
/// a flow line once it runs into an earlier flow line of the same angle.
class CellOccupancy {
 public:
  explicit CellOccupancy(const TriangulatedGrid& grid);

  long owner(Point p) const;
  void mark(const FlowPath& path, long id);
  void mark_segment(Point a, Point b, long id);

 private:
  std::size_t cell_of(Point p) const;

  TriangulatedGrid grid_;
  std::vector<long> owner_;
};

struct TraceOptions {
  double step = 0.0;    // 0 means spacing / 2
  double maxLen = 0.0;  // 0 means 10 side lengths
  const CellOccupancy* stopOn = nullptr;
};

/// Unit-speed forward Euler for eta' = exp(i (h(eta)/chi + theta)).
FlowPath trace_flow_line(const DiscreteField& field, Point start, double theta,
                         const TraceOptions& opts = {});
FlowPath trace_flow_line(const DiscreteField& field, Point start, double theta, double step,
                         double maxLen);

/// Fixed-angle segments, each restarted from the previous tip with the next angle.
FlowPath trace_angle_varying(const DiscreteField& field, Point start,
                             const AngleSchedule& schedule, const TraceOptions& opts = {});
FlowPath trace_angle_varying(const DiscreteField& field, Point start,
                             const AngleSchedule& schedule, double step, double maxLen);

struct LightConeSet {
  std::vector<Point> points;
  std::vector<int> generation;
  std::vector<FlowPath> paths;  // every traced path, generation order
  std::vector<int> pathGeneration;

  std::size_t size() const { return points.size(); }
};

struct LightConeOptions {
  int iterations = 3;
  double step = 0.0;   // 0 means spacing / 2
  int seedEvery = 5;   // re-seed every k-th vertex of the previous generation
  double maxLen = 0.0; // per path; 0 means 10 side lengths
  std::size_t maxPaths = 200000;
  double sideOffset = 1.0;   // seed displacement off the parent, in grid spacings
};

/// Generation 0 holds the flow lines of angle +pi/2 and -pi/2 from start
/// (iterations = 1 returns just these). Generation g seeds paths of the
/// opposite angle along every seedEvery-th vertex of generation g-1 paths; a
/// path stops when it enters a cell already visited by an earlier path of the
/// same angle.
LightConeSet light_cone(const DiscreteField& field, Point start, const LightConeOptions& opts);
LightConeSet light_cone(const DiscreteField& field, Point start, int iterations, double step);

/// One flow line per angle -pi/2 + j pi/(m-1), j = 0..m-1.
std::vector<FlowPath> fan(const DiscreteField& field, Point start, int angleCount,
                          const TraceOptions& opts = {});
std::vector<double> fan_angles(int angleCount);

// ---------------------------------------------------------------------------
// Polyline geometry

struct Crossing {
  std::size_t segmentA = 0;  // segment [segmentA, segmentA + 1] of a
  std::size_t segmentB = 0;
  double paramA = 0.0;  // arclength-free parameter segmentA + fraction
  double paramB = 0.0;
  Point point{0.0, 0.0};
};

/// Transversal crossings only: both segments must strictly change side.
std::optional<Crossing> segment_crossing(Point p1, Point p2, Point q1, Point q2);

/// All transversal crossings ordered by position along a.
std::vector<Crossing> detect_crossings(std::span<const Point> a, std::span<const Point> b);
std::optional<Crossing> detect_first_crossing(std::span<const Point> a, std::span<const Point> b);
std::optional<Crossing> detect_first_crossing(const FlowPath& a, const FlowPath& b);

double point_segment_distance(Point p, Point s0, Point s1);

/// Distance queries against a polyline (or a bare point set when asPoints is
/// set) through a bucket grid.
class PolylineIndex {
 public:
  explicit PolylineIndex(std::span<const Point> pts, double cell = 0.0, bool asPoints = false);

  /// Distance to the polyline if it is at most radius, otherwise +infinity.
  double distance_within(Point p, double radius) const;
  double distance(Point p) const;
  /// Sorted ids of segments (or points) registered in buckets meeting the box.
  void candidates(Point lo, Point hi, std::vector<std::uint32_t>& out) const;

 private:
  std::size_t element_count() const;
  double element_distance(std::size_t e, Point p) const;

  std::vector<Point> pts_;
  bool asPoints_;
  double cell_;
  double x0_;
  double y0_;
  long nx_;
  long ny_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

/// Index of the first vertex of a after which every vertex of a lies within
/// eps of polyline b; none if a's final vertex is farther than eps.
std::optional<std::size_t> detect_merge(std::span<const Point> a, std::span<const Point> b,
                                        double eps);
std::optional<std::size_t> detect_merge(const FlowPath& a, const FlowPath& b, double eps);

/// max over p in a of the distance from p to polyline b.
double directed_hausdorff(std::span<const Point> a, std::span<const Point> b);
/// max over p in a of the distance from p to the nearest point of the set b.
double directed_hausdorff_to_points(std::span<const Point> a, std::span<const Point> b);

double min_distance(std::span<const Point> a, std::span<const Point> b);

/// Fraction of grid squares containing a path vertex or segment midpoint.
double cell_coverage(const TriangulatedGrid& grid, std::span<const FlowPath> paths);

// Path CSV: t,x,y,theta. Light cone CSV: x,y,generation.
void write_path_csv(const std::filesystem::path& path, const FlowPath& p);
void write_paths_csv(const std::filesystem::path& path, std::span<const FlowPath> paths);
FlowPath read_path_csv(const std::filesystem::path& path);
/// Splits a multi-path file wherever t restarts at 0.
std::vector<FlowPath> read_paths_csv(const std::filesystem::path& path);
void write_light_cone_csv(const std::filesystem::path& path, const LightConeSet& cone);

}  // namespace igeom
