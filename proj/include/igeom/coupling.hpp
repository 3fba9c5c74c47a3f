#pragma once

#include <cstdint>
#include <vector>

#include "igeom/core.hpp"
#include "igeom/sle.hpp"

namespace igeom {

/// Boundary step function of the coupled field at one time, in the frame
/// where the driver sits at 0. Left of 0 the value is -lambda (1 + sum of the
/// left weights passed so far); right of 0 it is lambda (1 + sum of the right
/// weights passed so far).
struct HarmonicProfile {
  SleParams params;
  DerivedConstants consts;
  std::vector<double> jumps;   // increasing
  std::vector<double> values;  // values.size() == jumps.size() + 1

  /// Profile for force points whose images sit at VL - W and VR - W.
  static HarmonicProfile at(const SleParams& params, double W, const std::vector<double>& VL,
                            const std::vector<double>& VR);
  static HarmonicProfile initial(const SleParams& params);
};

/// Step value at s. At a jump the side decides which one-sided value is
/// returned; Right gives the value just to the right.
double harmonic_profile_value(const HarmonicProfile& profile, double s, Side side = Side::Right);

/// Bounded harmonic function in H with the profile as boundary values.
double harmonic_extension_value(const HarmonicProfile& profile, Point w);

struct CouplingObservable {
  double t = 0.0;
  Point z{0.0, 0.0};
  double hValue = 0.0;
  double logCR = 0.0;
};

/// h_t(z) = u_t(f_t(z)) - chi arg f_t'(z) with f_t = g_t - W_t, and
/// log CR(z; H \ K_t) = log(2 Im f_t(z)) - Re log g_t'(z).
CouplingObservable observe(const HarmonicProfile& profile, const MapState& state, double W);

/// Observables along a forward trajectory; stops before swallowing.
std::vector<CouplingObservable> evaluate_h_t(const DriverPath& driver,
                                             const std::vector<MapState>& states,
                                             const SleParams& params);

struct CouplingRun {
  bool swallowed = false;
  bool reached = true;
  std::vector<double> samples;  // h at the requested stopping points
};

struct MartingaleReport {
  double mean = 0.0;
  double stdErr = 0.0;
  std::size_t runs = 0;
  std::size_t swallowed = 0;
  bool inconclusive = false;
  bool pass = false;
};

struct CouplingOptions {
  double dt = 1e-4;
  double maxTime = 20.0;        // cap when waiting for a log-CR decrement
  double maxSwallowFraction = 0.01;
};

/// Mean of h_tau(z) - h_0(z) over runs; passes when within 3 standard errors of 0.
MartingaleReport martingale_test(const SleParams& params, Point z, double capacityTime,
                                 std::size_t runs, std::uint64_t seed,
                                 const CouplingOptions& opts = {});

struct VarianceReport {
  double crDecrement = 0.0;
  double variance = 0.0;
  double varianceRatio = 0.0;     // Var / s
  double ratioStdErr = 0.0;
  double fittedCoefficient = 0.0; // slope of Var against decrement through 0
  double kappaScaledRatio = 0.0;  // Var / (kappa s)
  double normalityPValue = 0.0;
  double incrementCorrelation = 0.0;
  double correlationStdErr = 0.0;
  std::size_t runs = 0;
  std::size_t unreached = 0;
  bool inconclusive = false;
  bool normal = false;
  bool uncorrelated = false;
  bool pass = false;
};

inline constexpr double kMinCrDecrement = 0.05;

/// Stops each run when log CR(z) first drops by s (linear interpolation
/// between steps) and compares Var h to s. Also records h at s/4, s/2, 3s/4
/// for the fitted slope and the increment correlation over (0, s/2], (s/2, s].
VarianceReport variance_vs_logCR_test(const SleParams& params, Point z, double crDecrement,
                                      std::size_t runs, std::uint64_t seed,
                                      const CouplingOptions& opts = {});

CouplingRun run_to_capacity(const SleParams& params, Point z, double capacityTime,
                            std::uint64_t seed, double dt);
CouplingRun run_to_decrements(const SleParams& params, Point z, const std::vector<double>& drops,
                              std::uint64_t seed, const CouplingOptions& opts);

}  // namespace igeom
