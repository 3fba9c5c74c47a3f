#include "igeom/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "igeom/rng.hpp"
#include "igeom/stats.hpp"

namespace igeom {

HarmonicProfile HarmonicProfile::at(const SleParams& params, double W,
                                    const std::vector<double>& VL, const std::vector<double>& VR) {
  HarmonicProfile p;
  p.params = params;
  p.consts = derive_constants(params.kappa);
  const double lambda = p.consts.lambda;
  const std::size_t k = VL.size();
  const std::size_t l = VR.size();

  double sumL = 0.0;
  for (double r : params.weightsL) sumL += r;
  // Farthest left image first.
  for (std::size_t m = k; m-- > 0;) {
    p.jumps.push_back(std::min(0.0, VL[m] - W));
    p.values.push_back(-lambda * (1.0 + sumL));
    sumL -= params.weightsL[m];
  }
  p.values.push_back(-lambda);
  p.jumps.push_back(0.0);
  double sumR = 0.0;
  p.values.push_back(lambda);
  for (std::size_t m = 0; m < l; ++m) {
    sumR += params.weightsR[m];
    p.jumps.push_back(std::max(0.0, VR[m] - W));
    p.values.push_back(lambda * (1.0 + sumR));
  }
  std::sort(p.jumps.begin(), p.jumps.end());
  return p;
}

HarmonicProfile HarmonicProfile::initial(const SleParams& params) {
  params.validate();
  return at(params, 0.0, params.pointsL, params.pointsR);
}

double harmonic_profile_value(const HarmonicProfile& profile, double s, Side side) {
  const auto& j = profile.jumps;
  const auto it = side == Side::Right ? std::upper_bound(j.begin(), j.end(), s)
                                      : std::lower_bound(j.begin(), j.end(), s);
  return profile.values[static_cast<std::size_t>(it - j.begin())];
}

double harmonic_extension_value(const HarmonicProfile& profile, Point w) {
  double u = profile.values.back();
  for (std::size_t k = 0; k < profile.jumps.size(); ++k) {
    const double angle = std::atan2(std::abs(w.imag()), w.real() - profile.jumps[k]);
    u += (profile.values[k] - profile.values[k + 1]) * angle / kPi;
  }
  return u;
}

CouplingObservable observe(const HarmonicProfile& profile, const MapState& state, double W) {
  CouplingObservable o;
  o.t = state.t;
  o.z = state.trackedPoint;
  const Point f = state.g - W;
  o.hValue = harmonic_extension_value(profile, f) - profile.consts.chi * state.logDeriv.imag();
  o.logCR = std::log(2.0 * f.imag()) - state.logDeriv.real();
  return o;
}

std::vector<CouplingObservable> evaluate_h_t(const DriverPath& driver,
                                             const std::vector<MapState>& states,
                                             const SleParams& params) {
  std::vector<CouplingObservable> out;
  std::vector<double> VL(driver.VL.size());
  std::vector<double> VR(driver.VR.size());
  for (std::size_t k = 0; k < states.size() && k < driver.W.size(); ++k) {
    if (states[k].swallowed) break;
    for (std::size_t i = 0; i < VL.size(); ++i) VL[i] = driver.VL[i][k];
    for (std::size_t i = 0; i < VR.size(); ++i) VR[i] = driver.VR[i][k];
    const HarmonicProfile p = HarmonicProfile::at(params, driver.W[k], VL, VR);
    out.push_back(observe(p, states[k], driver.W[k]));
  }
  return out;
}

namespace {

CouplingObservable observe_stepper(const SleParams& params, const DriverStepper& s,
                                   const MapState& m, std::vector<double>& VL,
                                   std::vector<double>& VR) {
  for (std::size_t i = 0; i < VL.size(); ++i) VL[i] = s.V(Side::Left, i);
  for (std::size_t i = 0; i < VR.size(); ++i) VR[i] = s.V(Side::Right, i);
  return observe(HarmonicProfile::at(params, s.W(), VL, VR), m, s.W());
}

}  // namespace

CouplingRun run_to_capacity(const SleParams& params, Point z, double capacityTime,
                            std::uint64_t seed, double dt) {
  DriverStepper s(params, dt, seed);
  MapState m = initial_map_state(z, s.W());
  std::vector<double> VL(params.pointsL.size());
  std::vector<double> VR(params.pointsR.size());
  CouplingRun run;
  if (m.swallowed) {
    run.swallowed = true;
    return run;
  }
  const double h0 = observe_stepper(params, s, m, VL, VR).hValue;
  const auto steps = static_cast<std::size_t>(std::llround(capacityTime / dt));
  for (std::size_t k = 0; k < steps; ++k) {
    if (!s.step()) break;
    loewner_advance(m, s.W(), dt);
    if (m.swallowed) {
      run.swallowed = true;
      return run;
    }
  }
  run.samples.push_back(observe_stepper(params, s, m, VL, VR).hValue - h0);
  return run;
}

CouplingRun run_to_decrements(const SleParams& params, Point z, const std::vector<double>& drops,
                              std::uint64_t seed, const CouplingOptions& opts) {
  DriverStepper s(params, opts.dt, seed);
  MapState m = initial_map_state(z, s.W());
  std::vector<double> VL(params.pointsL.size());
  std::vector<double> VR(params.pointsR.size());
  CouplingRun run;
  if (m.swallowed) {
    run.swallowed = true;
    run.reached = false;
    return run;
  }
  const CouplingObservable o0 = observe_stepper(params, s, m, VL, VR);
  double prevDrop = 0.0;
  double prevH = 0.0;
  std::size_t next = 0;
  const auto maxSteps = static_cast<std::size_t>(std::llround(opts.maxTime / opts.dt));
  for (std::size_t k = 0; k < maxSteps && next < drops.size(); ++k) {
    if (!s.step()) break;
    loewner_advance(m, s.W(), opts.dt);
    if (m.swallowed) {
      run.swallowed = true;
      break;
    }
    const CouplingObservable o = observe_stepper(params, s, m, VL, VR);
    const double drop = o0.logCR - o.logCR;
    const double h = o.hValue - o0.hValue;
    while (next < drops.size() && drop >= drops[next]) {
      const double frac = drop > prevDrop ? (drops[next] - prevDrop) / (drop - prevDrop) : 1.0;
      run.samples.push_back(prevH + frac * (h - prevH));
      ++next;
    }
    prevDrop = drop;
    prevH = h;
  }
  run.reached = next == drops.size();
  return run;
}

MartingaleReport martingale_test(const SleParams& params, Point z, double capacityTime,
                                 std::size_t runs, std::uint64_t seed,
                                 const CouplingOptions& opts) {
  params.validate();
  if (!(capacityTime >= 0.0)) throw ParameterError("capacityTime: must be non-negative");
  if (!(z.imag() > 0.0)) throw ParameterError("z: must lie in the upper half-plane");
  MartingaleReport r;
  std::vector<double> deltas;
  deltas.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const CouplingRun run = run_to_capacity(params, z, capacityTime, stream_seed(seed, i), opts.dt);
    if (run.swallowed) {
      ++r.swallowed;
      continue;
    }
    deltas.push_back(run.samples.front());
  }
  r.runs = deltas.size();
  if (deltas.empty()) return r;
  const auto sum = stats::summarize(deltas);
  r.mean = sum.mean;
  r.stdErr = sum.std_error();
  r.inconclusive = static_cast<double>(r.swallowed) > opts.maxSwallowFraction * static_cast<double>(runs);
  r.pass = !r.inconclusive && std::abs(r.mean) <= 3.0 * r.stdErr;
  return r;
}

VarianceReport variance_vs_logCR_test(const SleParams& params, Point z, double crDecrement,
                                      std::size_t runs, std::uint64_t seed,
                                      const CouplingOptions& opts) {
  params.validate();
  if (!(crDecrement >= kMinCrDecrement)) {
    throw ParameterError("crDecrement: must be at least 0.05");
  }
  if (!(z.imag() > 0.0)) throw ParameterError("z: must lie in the upper half-plane");
  const double s = crDecrement;
  const std::vector<double> drops{0.25 * s, 0.5 * s, 0.75 * s, s};
  std::vector<std::vector<double>> at(drops.size());
  VarianceReport r;
  r.crDecrement = s;
  for (std::size_t i = 0; i < runs; ++i) {
    const CouplingRun run = run_to_decrements(params, z, drops, stream_seed(seed, i), opts);
    if (!run.reached) {
      ++r.unreached;
      continue;
    }
    for (std::size_t d = 0; d < drops.size(); ++d) at[d].push_back(run.samples[d]);
  }
  r.runs = at.back().size();
  if (r.runs < 8) {
    r.inconclusive = true;
    return r;
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t d = 0; d < drops.size(); ++d) {
    const double v = stats::summarize(at[d]).variance;
    num += drops[d] * v;
    den += drops[d] * drops[d];
  }
  r.fittedCoefficient = num / den;
  const auto last = stats::summarize(at.back());
  r.variance = last.variance;
  r.varianceRatio = last.variance / s;
  r.ratioStdErr = r.varianceRatio * std::sqrt(2.0 / static_cast<double>(r.runs - 1));
  r.kappaScaledRatio = r.varianceRatio / params.kappa;
  const auto jb = stats::jarque_bera(at.back());
  r.normalityPValue = jb.pValue;
  r.normal = jb.pValue >= 0.01;
  std::vector<double> first = at[1];
  std::vector<double> second(r.runs);
  for (std::size_t i = 0; i < r.runs; ++i) second[i] = at[3][i] - at[1][i];
  r.incrementCorrelation = stats::pearson_correlation(first, second);
  r.correlationStdErr = 1.0 / std::sqrt(static_cast<double>(r.runs));
  r.uncorrelated = std::abs(r.incrementCorrelation) <= 3.0 * r.correlationStdErr;
  r.inconclusive = static_cast<double>(r.unreached) > opts.maxSwallowFraction * static_cast<double>(runs);
  r.pass = !r.inconclusive && r.varianceRatio >= 0.85 && r.varianceRatio <= 1.15 && r.normal;
  return r;
}

}  // namespace igeom
