#pragma once

#include <complex>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "igeom/core.hpp"
#include "igeom/rng.hpp"
#include "igeom/square_map.hpp"

namespace igeom {

// ---------------------------------------------------------------------------
// Bessel processes

/// Bessel process of dimension delta > 1 started at x0 >= 0, sampled every dt
/// up to T. Euler-Maruyama with reflection while X >= 3 sqrt(dt); below that
/// the exact squared-Bessel transition is used.
std::vector<double> simulate_bessel(double delta, double x0, double dt, double T,
                                    std::uint64_t seed);

/// One exact squared-Bessel step: returns X_{t+dt} given X_t = x.
double bessel_exact_step(double delta, double x, double dt, Rng& rng);

// ---------------------------------------------------------------------------
// Driving process

struct MergeEvent {
  Side side = Side::Right;
  std::size_t absorbed = 0;  // original force-point index on that side
  std::size_t into = 0;
  double time = 0.0;
};

struct DriverPath {
  double dt = 0.0;
  std::vector<double> W;
  std::vector<std::vector<double>> VL;  // VL[i][k] = V^{i,L} at step k
  std::vector<std::vector<double>> VR;
  std::optional<double> thresholdTime;
  std::vector<MergeEvent> mergedGroups;

  std::size_t steps() const { return W.empty() ? 0 : W.size() - 1; }
  double final_time() const { return dt * static_cast<double>(steps()); }
};

/// Streaming SLE_kappa(rho) driver. Force points on a side that collide are
/// grouped and their weights summed.
class DriverStepper {
 public:
  DriverStepper(const SleParams& params, double dt, std::uint64_t seed);

  /// Advances by dt; returns false (without moving) once the continuation
  /// threshold has been reached.
  bool step();

  double time() const { return dt_ * static_cast<double>(steps_); }
  double dt() const { return dt_; }
  double W() const { return W_; }
  double V(Side side, std::size_t i) const;
  std::size_t count(Side side) const;
  std::optional<double> threshold_time() const { return threshold_; }
  const std::vector<MergeEvent>& merges() const { return merges_; }
  /// Whether the last step used the squared-Bessel transition for the gap.
  bool last_step_in_collision() const { return lastCollision_; }

 private:
  struct Group {
    double V = 0.0;
    double weight = 0.0;
    std::vector<std::size_t> members;
  };

  double drift(double w) const;
  void coalesce(Side side);
  void substep(double h, double tEnd);
  void euler_step(double z, double h, double tEnd);
  void collision_step(Side side, double h, double tEnd);

  double kappa_;
  double sqrtKappa_;
  double dt_;
  Rng rng_;
  double W_ = 0.0;
  std::vector<Group> left_;   // nearest first
  std::vector<Group> right_;  // nearest first
  std::vector<std::size_t> groupOfL_;
  std::vector<std::size_t> groupOfR_;
  std::size_t steps_ = 0;
  std::optional<double> threshold_;
  std::vector<MergeEvent> merges_;
  bool lastCollision_ = false;
};

/// Microscopic initial separation used when both 0^- and 0^+ carry force points.
inline constexpr double kMicroscopicGapLog = -12.0;

DriverPath simulate_driver(const SleParams& params, double dt, double T, std::uint64_t seed);

/// Driver W(t) = f(t) sampled on the grid k dt with no force points.
DriverPath deterministic_driver(double dt, double T, double (*f)(double));
DriverPath zero_driver(double dt, double T);

/// Fraction of steps with |W - V| < window for the given force point.
double collision_occupation(const DriverPath& d, Side side, std::size_t index, double window);

// ---------------------------------------------------------------------------
// Loewner evolution

inline constexpr double kSwallowCutoff = 1e-6;

struct MapState {
  Point trackedPoint{0.0, 0.0};
  double t = 0.0;
  Point g{0.0, 0.0};        // g_t(z)
  Point logDeriv{0.0, 0.0}; // log g_t'(z)
  bool swallowed = false;
  double swallowTime = 0.0;

  double log_conformal_radius(double W) const;
};

/// Square root with non-negative imaginary part; on the real axis the sign
/// follows `side`.
Point sqrt_upper(Point u, double side);

/// Composes the vertical-slit map of capacity 2 dt at the new driver value.
void loewner_advance(MapState& s, double Wnext, double dt);

MapState initial_map_state(Point z, double W0);

/// Trajectory of g_t(z) sampled at every driver step until swallowing.
std::vector<MapState> loewner_forward(const DriverPath& driver, Point z);

struct CurvePolyline {
  std::vector<Point> vertices;
  std::vector<double> times;
  double dt = 0.0;
  double tipOffset = 0.0;
};

/// Tip at step k: W_k + i tipOffset pulled back through the inverse slit maps.
Point curve_point(const std::vector<double>& W, std::size_t k, double dt, double tipOffset);

/// Trace vertices at every stride-th step; vertex 0 is 0.
CurvePolyline extract_curve(const DriverPath& driver, double tipOffset, std::size_t stride = 1);

/// Reverse Loewner flow over a growing driver. Aligned blocks of 16^l steps
/// keep a truncated Laurent expansion of their composed inverse map, used for
/// points far from the block's hull.
class TraceEvaluator {
 public:
  static constexpr int kOrder = 16;
  static constexpr std::size_t kFan = 16;
  static constexpr int kLevels = 4;
  static constexpr double kFar = 2.0;  // series used when |z - center| > kFar radius

  explicit TraceEvaluator(double dt);

  /// W_0 first, then one value per step.
  void push(double w);
  std::size_t steps() const { return W_.empty() ? 0 : W_.size() - 1; }
  double dt() const { return dt_; }

  /// F_1 o ... o F_k (z).
  Point pull_back(Point z, std::size_t k) const;
  Point tip(std::size_t k, double tipOffset) const;

 private:
  struct Series {
    double center = 0.0;
    double radius = 0.0;
    std::array<double, kOrder + 1> a{};  // z + a_0 + sum a_n (z - center)^-n
    Point operator()(Point z) const;
  };
  Series build(std::size_t first, std::size_t last) const;
  Series compose(int level, std::size_t firstChild) const;
  Point apply(Point z, int level, std::size_t index) const;

  double dt_;
  std::vector<double> W_;
  std::array<std::vector<Series>, kLevels> blocks_;
};

struct Estimate {
  double estimate = 0.0;
  double stdErr = 0.0;
  std::size_t runs = 0;
};

struct BoundaryHitOptions {
  double T = 5.0;
  double dt = 1e-4;
  double tipOffset = 0.0;  // 0 means sqrt(dt) / 4
  std::size_t stride = 10;
};

/// Fraction of runs whose extracted trace comes within `proximity` of the real
/// interval [lo, hi] before capacity time T.
Estimate boundary_hit_probability(const SleParams& params, double lo, double hi, double proximity,
                                  std::size_t runs, std::uint64_t seed,
                                  const BoundaryHitOptions& opts = {});
bool run_hits_interval(const SleParams& params, double lo, double hi, double proximity,
                       std::uint64_t seed, const BoundaryHitOptions& opts);

// ---------------------------------------------------------------------------
// Files

void write_driver_csv(const std::filesystem::path& path, const DriverPath& d);
DriverPath read_driver_csv(const std::filesystem::path& path);
void write_curve_csv(const std::filesystem::path& path, const CurvePolyline& c);
std::string params_to_json(const SleParams& p);
SleParams params_from_json(const std::string& text);

}  // namespace igeom
