#include "igeom/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "igeom/render.hpp"
#include "igeom/stats.hpp"

namespace igeom {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Digests

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Config

namespace {

const std::vector<std::string>& names() {
  static const std::vector<std::string> n{
      "constants",   "zeroDriver", "driverSanity", "boundaryHit", "reflection",
      "martingale",  "varianceCR", "monotonicity", "merge",       "cross",
      "duality",     "fanArea",    "figure"};
  return n;
}

json z_json(double re, double im) { return json::array({re, im}); }

}  // namespace

std::vector<std::string> experiment_names() { return names(); }

json experiment_preset(const std::string& name) {
  const double pi = kPi;
  if (name == "constants") return {{"count", 100}, {"kappaMax", 16.0}, {"tolerance", 1e-12}};
  if (name == "zeroDriver") {
    return {{"dt", 1e-4}, {"T", 1.0}, {"z", z_json(0, 1)}, {"tipOffset", 1e-3}, {"stride", 10},
            {"tolerance", 1e-6}};
  }
  if (name == "driverSanity") {
    return {{"kappa", 2.0}, {"runs", 10000}, {"dt", 1e-3}, {"T", 1.0}, {"forcePoint", 0.0},
            {"varianceBand", json::array({0.95, 1.05})}, {"alpha", 0.01}};
  }
  if (name == "boundaryHit") {
    return {{"kappa", 2.0}, {"interval", json::array({1.0, 2.0})}, {"proximity", 0.05},
            {"T", 5.0}, {"dt", 1e-4}, {"stride", 10}, {"runs", 2000},
            {"rhoHit", -1.5}, {"rhoAvoid", -0.5}, {"minGap", 0.15}, {"maxAvoid", 0.05}};
  }
  if (name == "reflection") {
    return {{"kappa", 2.0}, {"rho", -1.0}, {"dts", json::array({1e-3, 1e-4, 1e-5})},
            {"T", 1.0}, {"runs", 100}, {"windowFactor", 3.0}};
  }
  if (name == "martingale") {
    json cases = json::array();
    for (double im : {1.0, 2.0}) cases.push_back({{"pointsR", json::array()}, {"weightsR", json::array()}, {"z", z_json(0, im)}});
    for (double im : {1.0, 2.0}) cases.push_back({{"pointsR", json::array({1.0})}, {"weightsR", json::array({1.0})}, {"z", z_json(0, im)}});
    return {{"kappa", 2.0}, {"capacityTime", 0.1}, {"runs", 10000}, {"dt", 1e-4}, {"cases", cases}};
  }
  if (name == "varianceCR") {
    return {{"kappa", 2.0}, {"z", z_json(0, 1)}, {"crDecrement", 0.2}, {"runs", 10000},
            {"dt", 1e-4}, {"band", json::array({0.85, 1.15})}};
  }
  if (name == "monotonicity") {
    return {{"kappa", 0.5}, {"n", 100}, {"runs", 200}, {"theta1", -pi / 4}, {"theta2", pi / 4},
            {"maxRate", 0.02}};
  }
  if (name == "merge") {
    return {{"kappa", 0.5}, {"n", 100}, {"runs", 200}, {"theta", 0.0}, {"startFraction", 1.0 / 3.0},
            {"minRate", 0.95}};
  }
  if (name == "cross") {
    return {{"kappa", 0.5}, {"n", 100}, {"runs", 200}, {"thetaRight", pi / 4}, {"thetaLeft", -pi / 4},
            {"startFraction", 1.0 / 3.0}, {"maxRate", 0.05}};
  }
  if (name == "duality") {
    return {{"kappa", 0.5}, {"n", 200}, {"runs", 100}, {"iterations", 8}, {"seedEvery", 5},
            {"thetas", json::array({-pi / 4, 0.0, pi / 4})}, {"toleranceCells", 3.0}, {"minRate", 0.9}};
  }
  if (name == "fanArea") {
    return {{"kappa", 0.25}, {"ns", json::array({50, 100, 200})}, {"runs", 20}, {"angles", 50}};
  }
  if (name == "figure") {
    return {{"preset", "fan"}, {"n", 300}, {"kappa", 4.0 / 3.0}, {"angles", 12}, {"iterations", 3},
            {"seedEvery", 5}, {"stepCells", 0.5}, {"imageSize", 900}};
  }
  throw ValidationError("experiment: unknown name '" + name + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  ExperimentConfig c;
  try {
    c.experiment = j.at("experiment").get<std::string>();
  } catch (const json::exception&) {
    throw ValidationError("experiment: missing or not a string");
  }
  if (j.contains("parameters")) c.parameters = j["parameters"];
  auto non_negative = [](const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  };
  if (j.contains("seed")) {
    if (!non_negative(j["seed"])) throw ValidationError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("runs")) {
    if (!non_negative(j["runs"])) throw ValidationError("runs: expected a non-negative integer");
    c.runs = j["runs"].get<std::size_t>();
  }
  if (j.contains("jobs")) {
    if (!j["jobs"].is_number_integer()) throw ValidationError("jobs: expected an integer");
    c.jobs = j["jobs"].get<int>();
  }
  if (j.contains("out")) c.outDir = j["out"].get<std::string>();
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"experiment", experiment}, {"parameters", parameters}, {"seed", seed}, {"runs", runs}};
}

std::string ExperimentConfig::hash() const {
  const std::string canon = to_json().dump();
  return sha256_hex(canon.data(), canon.size());
}

void ExperimentConfig::validate() const {
  if (std::find(names().begin(), names().end(), experiment) == names().end()) {
    throw ValidationError("experiment: unknown name '" + experiment + "'");
  }
  if (jobs < 1) throw ValidationError("jobs: must be at least 1");
  if (!parameters.is_object()) throw ValidationError("parameters: expected a JSON object");
  const json preset = experiment_preset(experiment);
  for (const auto& [key, value] : parameters.items()) {
    if (!preset.contains(key)) throw ValidationError("parameters." + key + ": unknown parameter");
    const json& ref = preset[key];
    const bool ok = (ref.is_number() && value.is_number()) || (ref.is_array() && value.is_array()) ||
                    (ref.is_string() && value.is_string()) || (ref.is_boolean() && value.is_boolean());
    if (!ok) throw ValidationError("parameters." + key + ": wrong type");
  }
}

json resolved_parameters(const ExperimentConfig& config) {
  json p = experiment_preset(config.experiment);
  for (const auto& [key, value] : config.parameters.items()) p[key] = value;
  if (config.runs > 0 && p.contains("runs")) p["runs"] = config.runs;
  return p;
}

json RunManifest::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}});
  return {{"configHash", configHash}, {"seed", seed},       {"toolVersion", toolVersion},
          {"startedAt", startedAt},   {"seconds", seconds}, {"outputs", outs},
          {"passFail", pass ? "pass" : "fail"}, {"dirichletForm", "triangulation"}};
}

// ---------------------------------------------------------------------------
// Field setups

FieldSetup::FieldSetup(double kappa, int n, const StepFunction& halfPlane, double offset)
    : consts(derive_constants(kappa)), grid(n), op(grid), boundary(pullback_boundary_data(halfPlane, grid, consts.chi)) {
  for (double& v : boundary.values) v += offset;
}

DiscreteField FieldSetup::sample(std::uint64_t seed) const {
  return sample_field(op, seed, boundary, consts.chi);
}

double bottom_vertex_preimage(const TriangulatedGrid& grid, int column) {
  static const SquareMap map;
  const Point w = grid.to_unit_square(grid.vertex(column, 0));
  return map.boundary_to_real({w.real(), -1.0});
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct Outcome {
  json report;
  bool pass = false;
  std::vector<std::pair<std::string, std::string>> textFiles;  // name, contents
  std::vector<std::pair<std::string, Image>> images;
};

template <class T>
T param(const json& p, const std::string& key) {
  if (!p.contains(key)) throw ValidationError("parameters." + key + ": missing");
  try {
    return p.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("parameters." + key + ": wrong type");
  }
}

Point param_point(const json& p, const std::string& key) {
  const auto v = param<std::vector<double>>(p, key);
  if (v.size() != 2) throw ValidationError("parameters." + key + ": expected [re, im]");
  return {v[0], v[1]};
}

std::size_t param_count(const json& p, const std::string& key) {
  const double v = param<double>(p, key);
  if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("parameters." + key + ": expected a count");
  return static_cast<std::size_t>(v);
}

json base_report(const std::string& test, const json& params, std::size_t runs, double estimate,
                 double stderr, bool pass, const std::string& claim, const json& tolerance) {
  return {{"test", test},         {"params", params}, {"runs", runs},   {"estimate", estimate},
          {"stderr", stderr},     {"pass", pass},     {"claim", claim}, {"tolerance", tolerance}};
}

Outcome no_data(const std::string& test, const json& p, const std::string& claim) {
  Outcome o;
  o.report = base_report(test, p, 0, 0.0, 0.0, false, claim, nullptr);
  o.report["noData"] = true;
  return o;
}

Outcome run_constants(const json& p) {
  const std::size_t count = param_count(p, "count");
  const double kmax = param<double>(p, "kappaMax");
  const double tol = param<double>(p, "tolerance");
  double quarter = 0.0, full = 0.0, duality = 0.0;
  for (std::size_t k = 1; k <= count; ++k) {
    const double kappa = kmax * static_cast<double>(k) / static_cast<double>(count);
    const DerivedConstants c = derive_constants(kappa);
    quarter = std::max(quarter, c.quarter_turn_residual());
    full = std::max(full, c.full_revolution_residual());
    duality = std::max(duality, std::abs(c.chi + derive_constants(16.0 / kappa).chi));
  }
  Outcome o;
  o.pass = count > 0 && quarter < tol && full < tol;
  o.report = base_report("constants", p, count, std::max(quarter, full), 0.0, o.pass,
                         "lambda' = lambda - (pi/2) chi and 2 pi chi = (4 - kappa) lambda", tol);
  o.report["quarterTurnResidual"] = quarter;
  o.report["fullRevolutionResidual"] = full;
  o.report["chiDualityResidual"] = duality;
  return o;
}

Outcome run_zero_driver(const json& p) {
  const double dt = param<double>(p, "dt");
  const double T = param<double>(p, "T");
  const Point z = param_point(p, "z");
  const double tip = param<double>(p, "tipOffset");
  const std::size_t stride = std::max<std::size_t>(1, param_count(p, "stride"));
  const double tol = param<double>(p, "tolerance");
  const DriverPath d = zero_driver(dt, T);
  const auto states = loewner_forward(d, z);
  double mapErr = 0.0, crErr = 0.0;
  double reached = 0.0;
  for (const MapState& s : states) {
    if (s.swallowed) break;
    const Point exact = sqrt_upper(z * z + 4.0 * s.t, z.real());
    mapErr = std::max(mapErr, std::abs(s.g - exact));
    const Point dexact = z / exact;
    const double crExact = 2.0 * exact.imag() / std::abs(dexact);
    crErr = std::max(crErr, std::abs(std::exp(s.log_conformal_radius(0.0)) - crExact));
    reached = s.t;
  }
  const CurvePolyline c = extract_curve(d, tip, stride);
  double curveErr = 0.0;
  for (std::size_t k = 0; k < c.vertices.size(); ++k) {
    curveErr = std::max(curveErr, std::abs(c.vertices[k] - Point{0.0, 2.0 * std::sqrt(c.times[k])}));
  }
  Outcome o;
  o.pass = mapErr < tol && crErr < tol && curveErr < 2.0 * tip;
  o.report = base_report("zeroDriver", p, 1, mapErr, 0.0, o.pass,
                         "g_t(z) = sqrt(z^2 + 4t) and the trace is the slit 2i sqrt(t)", tol);
  o.report["conformalRadiusError"] = crErr;
  o.report["curveError"] = curveErr;
  o.report["curveTolerance"] = 2.0 * tip;
  o.report["evaluatedUntil"] = reached;
  o.report["swallowTime"] = states.empty() || !states.back().swallowed ? json(nullptr) : json(states.back().swallowTime);
  return o;
}

Outcome run_driver_sanity(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const std::size_t runs = param_count(p, "runs");
  const double dt = param<double>(p, "dt");
  const double T = param<double>(p, "T");
  const double x = param<double>(p, "forcePoint");
  const auto band = param<std::vector<double>>(p, "varianceBand");
  const double alpha = param<double>(p, "alpha");
  if (runs < 2) return no_data("driverSanity", p, "plain driver is sqrt(kappa) B");
  const SleParams plain = SleParams::plain(kappa);
  const SleParams zero = SleParams::one_right(kappa, x, 0.0);
  const auto a = parallel_map<double>(runs, jobs, [&](std::size_t i) {
    return simulate_driver(plain, dt, T, stream_seed(stream_seed(seed, 0), i)).W.back();
  });
  const auto b = parallel_map<double>(runs, jobs, [&](std::size_t i) {
    return simulate_driver(zero, dt, T, stream_seed(stream_seed(seed, 1), i)).W.back();
  });
  const auto sa = stats::summarize(a);
  const double ratio = sa.variance / (kappa * T);
  const double ks = stats::ks_two_sample(a, b);
  const double crit = stats::ks_critical(runs, runs, alpha);
  Outcome o;
  o.pass = ratio >= band[0] && ratio <= band[1] && ks < crit;
  o.report = base_report("driverSanity", p, runs, ratio, ratio * std::sqrt(2.0 / (runs - 1.0)), o.pass,
                         "without drift W = sqrt(kappa) B; a rho = 0 force point leaves the law unchanged",
                         band);
  o.report["ksStatistic"] = ks;
  o.report["ksCritical"] = crit;
  o.report["meanW"] = sa.mean;
  return o;
}

Outcome run_boundary_hit(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const auto interval = param<std::vector<double>>(p, "interval");
  if (interval.size() != 2) throw ValidationError("parameters.interval: expected [lo, hi]");
  const double prox = param<double>(p, "proximity");
  BoundaryHitOptions opts;
  opts.T = param<double>(p, "T");
  opts.dt = param<double>(p, "dt");
  opts.stride = std::max<std::size_t>(1, param_count(p, "stride"));
  const std::size_t runs = param_count(p, "runs");
  const double rhoHit = param<double>(p, "rhoHit");
  const double rhoAvoid = param<double>(p, "rhoAvoid");
  if (runs == 0) return no_data("boundaryHit", p, "boundary hitting threshold rho = kappa/2 - 2");
  auto estimate = [&](double rho, std::uint64_t part) {
    const SleParams sp = SleParams::one_right(kappa, 0.0, rho);
    const auto hits = parallel_map<double>(runs, jobs, [&](std::size_t i) {
      return run_hits_interval(sp, interval[0], interval[1], prox, stream_seed(stream_seed(seed, part), i), opts)
                 ? 1.0 : 0.0;
    });
    return stats::summarize(hits);
  };
  const auto hit = estimate(rhoHit, 0);
  const auto avoid = estimate(rhoAvoid, 1);
  Outcome o;
  const double gap = hit.mean - avoid.mean;
  o.pass = gap >= param<double>(p, "minGap") && avoid.mean <= param<double>(p, "maxAvoid");
  o.report = base_report("boundaryHit", p, runs, gap, std::hypot(hit.std_error(), avoid.std_error()), o.pass,
                         "the trace hits the boundary iff rho < kappa/2 - 2",
                         {{"minGap", p["minGap"]}, {"maxAvoid", p["maxAvoid"]}});
  o.report["estimateHit"] = hit.mean;
  o.report["stderrHit"] = hit.std_error();
  o.report["estimateAvoid"] = avoid.mean;
  o.report["stderrAvoid"] = avoid.std_error();
  return o;
}

Outcome run_reflection(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const double rho = param<double>(p, "rho");
  const auto dts = param<std::vector<double>>(p, "dts");
  const double T = param<double>(p, "T");
  const std::size_t runs = param_count(p, "runs");
  const double factor = param<double>(p, "windowFactor");
  if (runs == 0 || dts.empty()) return no_data("reflection", p, "instantaneous reflection");
  const SleParams sp = SleParams::one_right(kappa, 0.0, rho);
  json rows = json::array();
  std::vector<double> means;
  double lastErr = 0.0;
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const double dt = dts[k];
    const double window = factor * std::sqrt(kappa * dt);
    const auto occ = parallel_map<double>(runs, jobs, [&](std::size_t i) {
      const DriverPath d = simulate_driver(sp, dt, T, stream_seed(stream_seed(seed, k), i));
      return collision_occupation(d, Side::Right, 0, window);
    });
    const auto s = stats::summarize(occ);
    means.push_back(s.mean);
    lastErr = s.std_error();
    rows.push_back({{"dt", dt}, {"window", window}, {"occupation", s.mean}, {"stderr", s.std_error()}});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) decreasing = decreasing && means[k] < means[k - 1];
  Outcome o;
  o.pass = decreasing;
  o.report = base_report("reflection", p, runs, means.back(), lastErr, o.pass,
                         "time spent at the force point vanishes as dt decreases", "strictly decreasing");
  o.report["byDt"] = rows;
  return o;
}

Outcome run_martingale(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const double tau = param<double>(p, "capacityTime");
  const std::size_t runs = param_count(p, "runs");
  CouplingOptions opts;
  opts.dt = param<double>(p, "dt");
  const json cases = param<json>(p, "cases");
  if (runs == 0) return no_data("martingale", p, "h_t(z) is a martingale");
  json rows = json::array();
  bool all = true;
  double worst = 0.0, worstErr = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    SleParams sp = SleParams::plain(kappa);
    sp.pointsR = cases[c].value("pointsR", std::vector<double>{});
    sp.weightsR = cases[c].value("weightsR", std::vector<double>{});
    sp.pointsL = cases[c].value("pointsL", std::vector<double>{});
    sp.weightsL = cases[c].value("weightsL", std::vector<double>{});
    sp.validate();
    const auto zv = cases[c].at("z").get<std::vector<double>>();
    const Point z{zv.at(0), zv.at(1)};
    // Split into per-run work so the pool can share it.
    const std::uint64_t caseSeed = stream_seed(seed, c);
    const auto deltas = parallel_map<std::pair<bool, double>>(runs, jobs, [&](std::size_t i) {
      const CouplingRun run = run_to_capacity(sp, z, tau, stream_seed(caseSeed, i), opts.dt);
      return std::make_pair(run.swallowed, run.swallowed ? 0.0 : run.samples.front());
    });
    std::vector<double> kept;
    std::size_t swallowed = 0;
    for (const auto& [sw, v] : deltas) {
      if (sw) ++swallowed; else kept.push_back(v);
    }
    const auto s = stats::summarize(kept);
    const bool inconclusive = static_cast<double>(swallowed) > opts.maxSwallowFraction * static_cast<double>(runs);
    const bool pass = !kept.empty() && !inconclusive && std::abs(s.mean) <= 3.0 * s.std_error();
    all = all && pass;
    if (std::abs(s.mean) >= std::abs(worst)) {
      worst = s.mean;
      worstErr = s.std_error();
    }
    rows.push_back({{"params", json::parse(params_to_json(sp))}, {"z", zv}, {"mean", s.mean},
                    {"stderr", s.std_error()}, {"swallowed", swallowed}, {"inconclusive", inconclusive},
                    {"pass", pass}});
  }
  Outcome o;
  o.pass = all && !cases.empty();
  o.report = base_report("martingale", p, runs, worst, worstErr, o.pass,
                         "h_t(z) evolves as a martingale", "|mean| <= 3 stderr");
  o.report["cases"] = rows;
  return o;
}

Outcome run_variance(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const Point z = param_point(p, "z");
  const double s = param<double>(p, "crDecrement");
  const std::size_t runs = param_count(p, "runs");
  const auto band = param<std::vector<double>>(p, "band");
  CouplingOptions opts;
  opts.dt = param<double>(p, "dt");
  if (runs == 0) return no_data("varianceCR", p, "Var h equals the log conformal radius drop");
  if (s < kMinCrDecrement) throw ValidationError("parameters.crDecrement: must be at least 0.05");
  const SleParams sp = SleParams::plain(kappa);
  const std::vector<double> drops{0.25 * s, 0.5 * s, 0.75 * s, s};
  const auto results = parallel_map<CouplingRun>(runs, jobs, [&](std::size_t i) {
    return run_to_decrements(sp, z, drops, stream_seed(seed, i), opts);
  });
  std::vector<std::vector<double>> at(drops.size());
  std::size_t unreached = 0;
  for (const auto& r : results) {
    if (!r.reached) {
      ++unreached;
      continue;
    }
    for (std::size_t d = 0; d < drops.size(); ++d) at[d].push_back(r.samples[d]);
  }
  const std::size_t n = at.back().size();
  if (n < 8) return no_data("varianceCR", p, "Var h equals the log conformal radius drop");
  double num = 0.0, den = 0.0;
  for (std::size_t d = 0; d < drops.size(); ++d) {
    num += drops[d] * stats::summarize(at[d]).variance;
    den += drops[d] * drops[d];
  }
  const auto last = stats::summarize(at.back());
  const double ratio = last.variance / s;
  const auto jb = stats::jarque_bera(at.back());
  std::vector<double> second(n);
  for (std::size_t i = 0; i < n; ++i) second[i] = at[3][i] - at[1][i];
  const double corr = stats::pearson_correlation(at[1], second);
  const bool inconclusive = static_cast<double>(unreached) > opts.maxSwallowFraction * static_cast<double>(runs);
  Outcome o;
  o.pass = !inconclusive && ratio >= band[0] && ratio <= band[1] && jb.pValue >= 0.01;
  o.report = base_report("varianceCR", p, n, ratio, ratio * std::sqrt(2.0 / (n - 1.0)), o.pass,
                         "Var h(z) at a log conformal radius drop s equals s, Gaussian", band);
  o.report["fittedCoefficient"] = num / den;
  o.report["kappaScaledRatio"] = ratio / kappa;
  o.report["normalityPValue"] = jb.pValue;
  o.report["skewness"] = jb.skewness;
  o.report["excessKurtosis"] = jb.excessKurtosis;
  o.report["incrementCorrelation"] = corr;
  o.report["correlationStdErr"] = 1.0 / std::sqrt(static_cast<double>(n));
  o.report["unreached"] = unreached;
  o.report["inconclusive"] = inconclusive;
  return o;
}

// Flow-line experiments -----------------------------------------------------

double north_offset(const DerivedConstants& c) { return 0.5 * kPi * c.chi; }

// Boundary value +-a making the counterflow line an SLE_{kappa'}(kappa'/2; kappa'/2): the
// +-pi/2 flow lines then carry weight kappa/2 on their outer side and avoid the boundary.
double cone_boundary_value(const DerivedConstants& c) {
  return c.lambda * (1.0 + 0.5 * c.kappa) + 0.5 * kPi * c.chi;
}

// Prefix of a path before it first enters the disc of radius r around target.
std::vector<Point> until_near(const FlowPath& path, Point target, double r) {
  std::vector<Point> out;
  for (const Point& q : path.points) {
    out.push_back(q);
    if (std::abs(q - target) < r) break;
  }
  return out;
}

Outcome run_monotonicity(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const int n = static_cast<int>(param_count(p, "n"));
  const std::size_t runs = param_count(p, "runs");
  const double t1 = param<double>(p, "theta1");
  const double t2 = param<double>(p, "theta2");
  const double maxRate = param<double>(p, "maxRate");
  if (!(t1 < t2)) throw ValidationError("parameters.theta1: must be below theta2");
  if (runs == 0) return no_data("monotonicity", p, "ordered angles never cross");
  const DerivedConstants c = derive_constants(kappa);
  const FieldSetup setup(kappa, n, StepFunction::two_sided(c.lambda, c.lambda), north_offset(c));
  const Point start{0.0, setup.grid.y_min() + setup.grid.spacing()};
  // Both lines end at the image of infinity; the grid cannot order them inside its last cells.
  const Point target{0.0, setup.grid.y_max()};
  const double endRadius = 2.0 * setup.grid.spacing();
  const auto crossed = parallel_map<std::array<double, 2>>(runs, jobs, [&](std::size_t i) {
    const DiscreteField f = setup.sample(stream_seed(seed, i));
    const FlowPath a = trace_flow_line(f, start, t1);
    const FlowPath b = trace_flow_line(f, start, t2);
    const auto ca = until_near(a, target, endRadius);
    const auto cb = until_near(b, target, endRadius);
    return std::array<double, 2>{detect_first_crossing(ca, cb) ? 1.0 : 0.0,
                                 detect_first_crossing(a, b) ? 1.0 : 0.0};
  });
  std::vector<double> interior, raw;
  for (const auto& c : crossed) {
    interior.push_back(c[0]);
    raw.push_back(c[1]);
  }
  const auto s = stats::summarize(interior);
  Outcome o;
  o.pass = s.mean <= maxRate;
  o.report = base_report("monotonicity", p, runs, s.mean, s.std_error(), o.pass,
                         "a flow line of smaller angle stays to the right", maxRate);
  o.report["endpointRadius"] = endRadius;
  o.report["rawEstimate"] = stats::summarize(raw).mean;
  return o;
}

struct PairSetup {
  FieldSetup setup;
  Point left;
  Point right;
};

PairSetup pair_setup(double kappa, int n, double fraction, double leftValue, double middle,
                     double rightValue) {
  const TriangulatedGrid g(n);
  const int i1 = static_cast<int>(std::lround((n - 1) * fraction));
  const int i2 = n - 1 - i1;
  if (!(i1 > 0 && i1 < i2)) throw ValidationError("parameters.startFraction: starts must be distinct interior columns");
  const double x1 = bottom_vertex_preimage(g, i1);
  const double x2 = bottom_vertex_preimage(g, i2);
  const DerivedConstants c = derive_constants(kappa);
  StepFunction step{{x1, x2}, {leftValue, middle, rightValue}};
  return PairSetup{FieldSetup(kappa, n, step, north_offset(c)), g.vertex(i1, 0), g.vertex(i2, 0)};
}

Outcome run_merge(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const int n = static_cast<int>(param_count(p, "n"));
  const std::size_t runs = param_count(p, "runs");
  const double theta = param<double>(p, "theta");
  const double minRate = param<double>(p, "minRate");
  if (runs == 0) return no_data("merge", p, "equal-angle flow lines merge upon meeting");
  const DerivedConstants c = derive_constants(kappa);
  const PairSetup ps = pair_setup(kappa, n, param<double>(p, "startFraction"),
                                  -c.lambda - theta * c.chi, -theta * c.chi, c.lambda - theta * c.chi);
  const double h = ps.setup.grid.spacing();
  // 0: never within a cell, 1: close and merged, 2: close but not merged
  const auto outcome = parallel_map<int>(runs, jobs, [&](std::size_t i) {
    const DiscreteField f = ps.setup.sample(stream_seed(seed, i));
    const FlowPath a = trace_flow_line(f, ps.left, theta);
    const FlowPath b = trace_flow_line(f, ps.right, theta);
    if (min_distance(a.points, b.points) > h) return 0;
    return detect_merge(a, b, 2.0 * h) ? 1 : 2;
  });
  const auto close = static_cast<std::size_t>(std::count_if(outcome.begin(), outcome.end(), [](int v) { return v > 0; }));
  const auto merged = static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 1));
  const double rate = close > 0 ? static_cast<double>(merged) / static_cast<double>(close) : 0.0;
  Outcome o;
  o.pass = close > 0 && rate >= minRate;
  o.report = base_report("merge", p, runs, rate,
                         close > 0 ? std::sqrt(rate * (1 - rate) / static_cast<double>(close)) : 0.0, o.pass,
                         "flow lines of equal angle merge after meeting", minRate);
  o.report["closeRuns"] = close;
  o.report["mergedRuns"] = merged;
  return o;
}

Outcome run_cross(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const int n = static_cast<int>(param_count(p, "n"));
  const std::size_t runs = param_count(p, "runs");
  const double tR = param<double>(p, "thetaRight");
  const double tL = param<double>(p, "thetaLeft");
  const double maxRate = param<double>(p, "maxRate");
  if (!(tL < tR && tR < tL + kPi)) throw ValidationError("parameters.thetaRight: need thetaLeft < thetaRight < thetaLeft + pi");
  if (runs == 0) return no_data("cross", p, "flow lines cross at most once");
  const DerivedConstants c = derive_constants(kappa);
  const PairSetup ps = pair_setup(kappa, n, param<double>(p, "startFraction"),
                                  -c.lambda - tL * c.chi, 0.0, c.lambda - tR * c.chi);
  const Point target{0.0, ps.setup.grid.y_max()};
  const double endRadius = 2.0 * ps.setup.grid.spacing();
  const auto counts = parallel_map<std::array<double, 2>>(runs, jobs, [&](std::size_t i) {
    const DiscreteField f = ps.setup.sample(stream_seed(seed, i));
    const FlowPath a = trace_flow_line(f, ps.left, tL);
    const FlowPath b = trace_flow_line(f, ps.right, tR);
    const auto ca = until_near(a, target, endRadius);
    const auto cb = until_near(b, target, endRadius);
    return std::array<double, 2>{static_cast<double>(detect_crossings(ca, cb).size()),
                                 static_cast<double>(detect_crossings(a.points, b.points).size())};
  });
  std::vector<double> second(runs), any(runs), raw(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    second[i] = counts[i][0] >= 2 ? 1.0 : 0.0;
    any[i] = counts[i][0] >= 1 ? 1.0 : 0.0;
    raw[i] = counts[i][1] >= 2 ? 1.0 : 0.0;
  }
  const auto s = stats::summarize(second);
  Outcome o;
  o.pass = s.mean <= maxRate;
  o.report = base_report("cross", p, runs, s.mean, s.std_error(), o.pass,
                         "flow lines of different angles cross at most once", maxRate);
  o.report["crossedAtLeastOnce"] = stats::summarize(any).mean;
  o.report["endpointRadius"] = endRadius;
  o.report["rawEstimate"] = stats::summarize(raw).mean;
  return o;
}

DiscreteField light_cone_field(const FieldSetup& setup, std::uint64_t seed) { return setup.sample(seed); }

Outcome run_duality(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const int n = static_cast<int>(param_count(p, "n"));
  const std::size_t runs = param_count(p, "runs");
  LightConeOptions lo;
  lo.iterations = static_cast<int>(param_count(p, "iterations"));
  lo.seedEvery = static_cast<int>(param_count(p, "seedEvery"));
  const auto thetas = param<std::vector<double>>(p, "thetas");
  const double tolCells = param<double>(p, "toleranceCells");
  const double minRate = param<double>(p, "minRate");
  if (runs == 0) return no_data("duality", p, "the light cone contains the fan");
  const DerivedConstants c = derive_constants(kappa);
  const FieldSetup setup(kappa, n, StepFunction::two_sided(cone_boundary_value(c), cone_boundary_value(c)), north_offset(c));
  const double h = setup.grid.spacing();
  const Point start{0.0, setup.grid.y_min() + h};
  struct Row {
    double worst = 0.0;
    bool contained = false;
    bool generationOneExact = false;
    std::size_t paths = 0;
  };
  const auto rows = parallel_map<Row>(runs, jobs, [&](std::size_t i) {
    const DiscreteField f = light_cone_field(setup, stream_seed(seed, i));
    const LightConeSet cone = light_cone(f, start, lo);
    Row r;
    r.paths = cone.paths.size();
    const FlowPath up = trace_flow_line(f, start, 0.5 * kPi);
    const FlowPath down = trace_flow_line(f, start, -0.5 * kPi);
    r.generationOneExact = cone.paths.size() >= 2 && cone.paths[0].points == up.points &&
                           cone.paths[1].points == down.points;
    for (double theta : thetas) {
      const FlowPath path = trace_flow_line(f, start, theta);
      r.worst = std::max(r.worst, directed_hausdorff_to_points(path.points, cone.points));
    }
    r.contained = r.worst <= tolCells * h;
    return r;
  });
  std::vector<double> ok(runs), worst(runs), paths(runs);
  bool exact = true;
  for (std::size_t i = 0; i < runs; ++i) {
    ok[i] = rows[i].contained ? 1.0 : 0.0;
    worst[i] = rows[i].worst / h;
    paths[i] = static_cast<double>(rows[i].paths);
    exact = exact && rows[i].generationOneExact;
  }
  const auto s = stats::summarize(ok);
  Outcome o;
  o.pass = exact && s.mean >= minRate;
  o.report = base_report("duality", p, runs, s.mean, s.std_error(), o.pass,
                         "fixed-angle flow lines lie in the light cone; its first generation is the +-pi/2 pair",
                         {{"hausdorffCells", tolCells}, {"minRate", minRate}});
  o.report["generationOneExact"] = exact;
  o.report["meanWorstDistanceCells"] = stats::summarize(worst).mean;
  o.report["meanPathCount"] = stats::summarize(paths).mean;
  return o;
}

Outcome run_fan_area(const json& p, std::uint64_t seed, int jobs) {
  const double kappa = param<double>(p, "kappa");
  const auto ns = param<std::vector<int>>(p, "ns");
  const std::size_t runs = param_count(p, "runs");
  const int angles = static_cast<int>(param_count(p, "angles"));
  if (runs == 0 || ns.empty()) return no_data("fanArea", p, "the fan has zero area");
  const DerivedConstants c = derive_constants(kappa);
  json rows = json::array();
  std::vector<double> means;
  double lastErr = 0.0;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const FieldSetup setup(kappa, ns[k], StepFunction::two_sided(cone_boundary_value(c), cone_boundary_value(c)), north_offset(c));
    const Point start{0.0, setup.grid.y_min() + setup.grid.spacing()};
    const auto cov = parallel_map<double>(runs, jobs, [&](std::size_t i) {
      const DiscreteField f = setup.sample(stream_seed(stream_seed(seed, k), i));
      const auto paths = fan(f, start, angles);
      return cell_coverage(f.grid, paths);
    });
    const auto s = stats::summarize(cov);
    means.push_back(s.mean);
    lastErr = s.std_error();
    rows.push_back({{"n", ns[k]}, {"coverage", s.mean}, {"stderr", s.std_error()}});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) decreasing = decreasing && means[k] < means[k - 1];
  Outcome o;
  o.pass = decreasing && means.front() < 1.0;
  o.report = base_report("fanArea", p, runs, means.back(), lastErr, o.pass,
                         "the fan covers a vanishing fraction of cells under refinement", "strictly decreasing");
  o.report["byN"] = rows;
  return o;
}

std::string paths_csv(const std::vector<FlowPath>& paths) {
  std::ostringstream out;
  out << std::setprecision(17) << "t,x,y,theta\n";
  for (const FlowPath& path : paths) {
    for (std::size_t k = 0; k < path.points.size(); ++k) {
      out << static_cast<double>(k) * path.step << ',' << path.points[k].real() << ','
          << path.points[k].imag() << ',' << path.thetas[k] << '\n';
    }
  }
  return out.str();
}

Outcome run_figure(const json& p, std::uint64_t seed) {
  const std::string preset = param<std::string>(p, "preset");
  const int n = static_cast<int>(param_count(p, "n"));
  const double kappa = param<double>(p, "kappa");
  const int size = static_cast<int>(param_count(p, "imageSize"));
  const double stepCells = param<double>(p, "stepCells");
  if (!(stepCells > 0.0)) throw ValidationError("parameters.stepCells: must be positive");
  const DerivedConstants c = derive_constants(kappa);
  RenderSpec spec;
  spec.width = spec.height = size;
  Outcome o;
  std::string csv;
  Image img;
  std::size_t pathCount = 0;
  if (preset == "fan") {
    const int m = static_cast<int>(param_count(p, "angles"));
    if (m < 1) throw ValidationError("parameters.angles: must be positive");
    const FieldSetup setup(kappa, n, StepFunction::constant(0.0), 0.0);
    const DiscreteField f = setup.sample(seed);
    std::vector<FlowPath> paths;
    TraceOptions to;
    to.step = stepCells * setup.grid.spacing();
    for (int j = 0; j < m; ++j) paths.push_back(trace_flow_line(f, {0.0, 0.0}, 2.0 * kPi * j / m, to));
    csv = paths_csv(paths);
    img = render_paths(paths, spec);
    pathCount = paths.size();
  } else if (preset == "lightcone") {
    LightConeOptions lo;
    lo.iterations = static_cast<int>(param_count(p, "iterations"));
    lo.seedEvery = static_cast<int>(param_count(p, "seedEvery"));
    const FieldSetup setup(kappa, n, StepFunction::two_sided(cone_boundary_value(c), cone_boundary_value(c)), north_offset(c));
    lo.step = stepCells * setup.grid.spacing();
    const DiscreteField f = setup.sample(seed);
    const LightConeSet cone = light_cone(f, {0.0, setup.grid.y_min() + setup.grid.spacing()}, lo);
    std::ostringstream out;
    out << std::setprecision(17) << "x,y,generation\n";
    for (std::size_t k = 0; k < cone.points.size(); ++k) {
      out << cone.points[k].real() << ',' << cone.points[k].imag() << ',' << cone.generation[k] << '\n';
    }
    csv = out.str();
    img = render_paths(cone.paths, spec);
    pathCount = cone.paths.size();
  } else {
    throw ValidationError("parameters.preset: expected 'fan' or 'lightcone'");
  }
  const std::string csvDigest = sha256_hex(csv.data(), csv.size());
  const std::string imgDigest = sha256_hex(img.rgb.data(), img.rgb.size());
  o.pass = pathCount > 0;
  o.report = base_report("figure", p, 1, static_cast<double>(img.count_not(spec.background)), 0.0, o.pass,
                         "figure preset runs end to end with seed-stable output", "digest stable");
  o.report["csvDigest"] = csvDigest;
  o.report["pixelDigest"] = imgDigest;
  o.report["pathCount"] = pathCount;
  o.report["inkPixels"] = img.count_not(spec.background);
  o.textFiles.emplace_back(preset + ".csv", csv);
  o.images.emplace_back(preset + ".png", std::move(img));
  return o;
}

Outcome dispatch(const std::string& name, const json& p, std::uint64_t seed, int jobs) {
  if (name == "constants") return run_constants(p);
  if (name == "zeroDriver") return run_zero_driver(p);
  if (name == "driverSanity") return run_driver_sanity(p, seed, jobs);
  if (name == "boundaryHit") return run_boundary_hit(p, seed, jobs);
  if (name == "reflection") return run_reflection(p, seed, jobs);
  if (name == "martingale") return run_martingale(p, seed, jobs);
  if (name == "varianceCR") return run_variance(p, seed, jobs);
  if (name == "monotonicity") return run_monotonicity(p, seed, jobs);
  if (name == "merge") return run_merge(p, seed, jobs);
  if (name == "cross") return run_cross(p, seed, jobs);
  if (name == "duality") return run_duality(p, seed, jobs);
  if (name == "fanArea") return run_fan_area(p, seed, jobs);
  if (name == "figure") return run_figure(p, seed);
  throw ValidationError("experiment: unknown name '" + name + "'");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunManifest m;
  m.configHash = config.hash();
  m.seed = config.seed;
  m.startedAt = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const json params = resolved_parameters(config);
  Outcome o = dispatch(config.experiment, params, config.seed, config.jobs);
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.pass = o.pass;
  m.report = o.report;
  if (!config.outDir.empty()) {
    std::filesystem::create_directories(config.outDir);
    auto record = [&](const std::filesystem::path& file) {
      m.outputs.push_back({file.filename().string(), sha256_file(file)});
    };
    const auto reportPath = config.outDir / (config.experiment + "_report.json");
    {
      std::ofstream out(reportPath);
      out << o.report.dump(2) << '\n';
    }
    record(reportPath);
    for (const auto& [name, text] : o.textFiles) {
      const auto path = config.outDir / name;
      std::ofstream(path) << text;
      record(path);
    }
    for (const auto& [name, img] : o.images) {
      const auto path = config.outDir / name;
      write_png(path, img);
      record(path);
    }
    std::ofstream(config.outDir / (config.experiment + "_manifest.json")) << m.to_json().dump(2) << '\n';
  }
  return m;
}

}  // namespace igeom
