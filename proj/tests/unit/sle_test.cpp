#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "igeom/sle.hpp"
#include "igeom/stats.hpp"

using namespace igeom;

namespace {

double interval_distance(Point p, double lo, double hi) {
  const double x = std::clamp(p.real(), lo, hi);
  return std::abs(p - Point(x, 0.0));
}

}  // namespace

TEST_CASE("bessel second moment") {
  const double delta = 3.0;
  const double T = 1.0;
  const double dt = 1e-3;
  std::vector<double> sq, oracle;
  std::mt19937_64 eng(99);
  std::normal_distribution<double> nd;
  for (int r = 0; r < 10000; ++r) {
    const auto x = simulate_bessel(delta, 0.0, dt, T, stream_seed(1, r));
    sq.push_back(x.back() * x.back());
    // squared process dZ = delta dt + 2 sqrt(Z) dB, Euler, clipped at 0
    double z = 0.0;
    for (int k = 0; k < 1000; ++k) z = std::max(0.0, z + delta * dt + 2.0 * std::sqrt(z * dt) * nd(eng));
    oracle.push_back(z);
  }
  const auto s = stats::summarize(sq);
  const auto o = stats::summarize(oracle);
  CHECK(std::abs(s.mean - delta * T) <= 3.0 * s.std_error());
  CHECK(std::abs(s.mean - o.mean) <= 3.0 * std::hypot(s.std_error(), o.std_error()));
}

TEST_CASE("bessel dimension 2 does not reach 0") {
  const double dt = 1e-4;
  int near = 0;
  const int runs = 2000;
  for (int r = 0; r < runs; ++r) {
    const auto x = simulate_bessel(2.0, 1.0, dt, 1.0, stream_seed(5, r));
    if (*std::min_element(x.begin(), x.end()) < std::sqrt(dt) / 10) ++near;
  }
  CHECK(near <= runs / 100);
}

TEST_CASE("bessel occupation near 0 shrinks with dt") {
  const double delta = 1.5;
  std::vector<double> occ;
  for (double dt : {1e-3, 1e-4, 1e-5}) {
    const double window = std::sqrt(dt) / 10;
    std::size_t in = 0, total = 0;
    for (int r = 0; r < 40; ++r) {
      const auto x = simulate_bessel(delta, 0.0, dt, 1.0, stream_seed(8, r));
      for (std::size_t k = 1; k < x.size(); ++k) in += x[k] < window;
      total += x.size() - 1;
    }
    occ.push_back(static_cast<double>(in) / total);
  }
  CHECK(occ[0] > occ[1]);
  CHECK(occ[1] > occ[2]);
}

TEST_CASE("bessel arguments") {
  CHECK_THROWS_AS(simulate_bessel(1.0, 0.0, 1e-3, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(simulate_bessel(0.5, 0.0, 1e-3, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(simulate_bessel(2.0, -1.0, 1e-3, 1.0, 1), ParameterError);
}

TEST_CASE("plain driver variance") {
  const double kappa = 2.0;
  std::vector<double> w1;
  for (int r = 0; r < 10000; ++r) w1.push_back(simulate_driver(SleParams::plain(kappa), 0.01, 1.0, stream_seed(2, r)).W.back());
  const double ratio = stats::summarize(w1).variance / kappa;
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.05);
}

TEST_CASE("zero-weight force point leaves the driver unchanged in law") {
  std::vector<double> a, b;
  for (int r = 0; r < 10000; ++r) {
    a.push_back(simulate_driver(SleParams::plain(2.0), 0.01, 1.0, stream_seed(3, r)).W.back());
    b.push_back(simulate_driver(SleParams::one_right(2.0, 0.0, 0.0), 0.01, 1.0, stream_seed(4, r)).W.back());
  }
  CHECK(stats::ks_two_sample(a, b) < stats::ks_critical(a.size(), b.size(), 0.01));
}

TEST_CASE("driver ordering invariants") {
  SleParams p{2.0, {0.5, -1.2}, {-0.6, 1.0, 0.3}, {0.0, -0.5}, {0.0, 0.4, 1.5}};
  for (int r = 0; r < 20; ++r) {
    const auto d = simulate_driver(p, 1e-3, 1.0, stream_seed(6, r));
    for (std::size_t k = 0; k < d.W.size(); ++k) {
      for (std::size_t i = 0; i < d.VL.size(); ++i) {
        CHECK(d.VL[i][k] <= d.W[k]);
        if (i > 0) CHECK(d.VL[i][k] <= d.VL[i - 1][k]);
      }
      for (std::size_t i = 0; i < d.VR.size(); ++i) {
        CHECK(d.VR[i][k] >= d.W[k]);
        if (i > 0) CHECK(d.VR[i][k] >= d.VR[i - 1][k]);
      }
    }
  }
}

TEST_CASE("force points at both sides of 0") {
  const SleParams p{2.0, {-1.0}, {-1.0}, {0.0}, {0.0}};
  auto gapped = [](double r) {
    return SleParams{2.0, {-1.0}, {-1.0}, {-std::exp(r)}, {std::exp(r)}};
  };
  std::vector<double> w1, neg, quarter, wide;
  const int runs = 2000;
  for (int r = 0; r < runs; ++r) {
    const auto d = simulate_driver(p, 1e-3, 1.0, stream_seed(8, r));
    REQUIRE(d.W.size() == 1001);
    for (std::size_t k = 0; k < d.W.size(); ++k) {
      CHECK(d.VL[0][k] <= d.W[k]);
      CHECK(d.VR[0][k] >= d.W[k]);
    }
    w1.push_back(d.W.back());
    neg.push_back(-d.W.back());
    quarter.push_back(2.0 * simulate_driver(p, 2.5e-4, 0.25, stream_seed(9, r)).W.back());
    wide.push_back(simulate_driver(gapped(-6.0), 1e-3, 1.0, stream_seed(10, r)).W.back());
  }
  const auto s = stats::summarize(w1);
  CHECK(std::abs(s.mean) < 4.0 * s.std_error());
  const double crit = stats::ks_critical(runs, runs, 0.01);
  CHECK(stats::ks_two_sample(w1, neg) < crit);
  CHECK(stats::ks_two_sample(w1, quarter) < crit);
  CHECK(stats::ks_two_sample(w1, wide) < crit);
}

TEST_CASE("critical weight keeps the driver off the force point") {
  const double kappa = 2.0;
  const auto p = SleParams::one_right(kappa, 0.0, kappa / 2 - 2);
  int clean = 0;
  const int runs = 500;
  for (int r = 0; r < runs; ++r) {
    const auto d = simulate_driver(p, 1e-4, 1.0, stream_seed(7, r));
    bool ok = true;
    for (std::size_t k = 2; k < d.W.size(); ++k) ok = ok && d.VR[0][k] - d.W[k] > 0.0;
    clean += ok;
  }
  CHECK(clean >= 0.99 * runs);
}

TEST_CASE("continuation threshold at time 0") {
  DriverStepper s(SleParams::one_right(2.0, 0.0, -2.0), 1e-3, 1);
  CHECK(s.threshold_time() == std::optional<double>(0.0));
  CHECK_FALSE(s.step());
  const auto d = simulate_driver(SleParams::one_right(2.0, 0.0, -2.5), 1e-3, 1.0, 1);
  CHECK(d.thresholdTime.has_value());
  CHECK(d.steps() == 0);
}

TEST_CASE("zero driver: closed-form slit map") {
  const double dt = 1e-4;
  const auto d = zero_driver(dt, 1.0);
  const Point z{1.0, 1.0};
  const auto states = loewner_forward(d, z);
  REQUIRE(states.size() == d.W.size());
  double gErr = 0.0, crErr = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double t = k * dt;
    const Point g = std::sqrt(z * z + 4.0 * t);
    const Point gp = z / g;
    gErr = std::max(gErr, std::abs(states[k].g - g));
    const double cr = 2.0 * g.imag() / std::abs(gp);
    crErr = std::max(crErr, std::abs(std::exp(states[k].log_conformal_radius(0.0)) - cr));
  }
  CHECK(gErr < 1e-6);
  CHECK(crErr < 1e-6);
  // i sits on the slit and is swallowed at t = 1/4
  const auto onSlit = loewner_forward(d, {0.0, 1.0});
  REQUIRE(onSlit.back().swallowed);
  CHECK(onSlit.back().swallowTime == doctest::Approx(0.25).epsilon(1e-3));
  for (const auto& s : onSlit) {
    if (s.swallowed) break;
    CHECK(std::abs(s.g - std::sqrt(Point(-1.0 + 4.0 * s.t, 0.0))) < 1e-6);
  }
  // composed slit maps add capacity exactly for a fixed driver
  MapState m = initial_map_state({0.3, 0.7}, 0.0);
  for (int k = 0; k < 1000; ++k) loewner_advance(m, 0.0, 1e-3);
  CHECK(std::abs(m.g - std::sqrt(Point(0.3, 0.7) * Point(0.3, 0.7) + 4.0)) < 1e-12);
  CHECK(initial_map_state({0.0, 0.0}, 0.0).swallowed);
}

TEST_CASE("sqrt_upper branch") {
  CHECK(sqrt_upper({-4.0, 0.0}, 1.0) == Point(0.0, 2.0));
  CHECK(sqrt_upper({4.0, 0.0}, -1.0) == Point(-2.0, 0.0));
  CHECK(sqrt_upper({0.0, -2.0}, 1.0).imag() > 0.0);
}

TEST_CASE("zero driver curve is the vertical slit") {
  const double dt = 1e-4;
  const double tip = 0.25 * std::sqrt(dt);
  const auto c = extract_curve(zero_driver(dt, 1.0), tip, 10);
  CHECK(c.vertices.front() == Point(0.0, 0.0));
  double err = 0.0;
  for (std::size_t k = 0; k < c.vertices.size(); ++k) err = std::max(err, std::abs(c.vertices[k] - Point(0.0, 2.0 * std::sqrt(c.times[k]))));
  CHECK(err < 2.0 * tip);
}

TEST_CASE("random curve starts at 0") {
  const auto d = simulate_driver(SleParams::one_left(3.0, -0.5, 1.0), 1e-3, 0.5, 12);
  CHECK(extract_curve(d, 0.01).vertices.front() == Point(0.0, 0.0));
}

TEST_CASE("curve self-convergence at kappa 8/3") {
  // the refined driver interpolates the coarse samples linearly
  const double kappa = 8.0 / 3.0;
  const double dt = 1e-4;
  const std::size_t steps = 5000;
  std::mt19937_64 eng(13);
  std::normal_distribution<double> nd;
  DriverPath coarse;
  coarse.dt = dt;
  coarse.W.push_back(0.0);
  for (std::size_t k = 0; k < steps; ++k) coarse.W.push_back(coarse.W.back() + std::sqrt(kappa * dt) * nd(eng));
  DriverPath fine;
  fine.dt = dt / 2;
  for (std::size_t k = 0; k < steps; ++k) {
    fine.W.push_back(coarse.W[k]);
    fine.W.push_back(0.5 * (coarse.W[k] + coarse.W[k + 1]));
  }
  fine.W.push_back(coarse.W.back());
  const double tip = std::sqrt(dt);
  const auto a = extract_curve(coarse, tip, 1);
  const auto b = extract_curve(fine, tip / 2, 2);
  REQUIRE(a.vertices.size() == b.vertices.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.vertices.size(); ++k) worst = std::max(worst, std::abs(a.vertices[k] - b.vertices[k]));
  CHECK(worst <= 4.0 * tip);
}

TEST_CASE("trace evaluator agrees with direct pull-back") {
  const auto d = simulate_driver(SleParams::plain(4.0), 1e-4, 0.6, 21);
  TraceEvaluator te(d.dt);
  for (double w : d.W) te.push(w);
  for (std::size_t k : {std::size_t{1}, std::size_t{17}, std::size_t{256}, std::size_t{4097}, d.steps()}) {
    for (double tip : {1e-3, 0.05}) {
      CHECK(std::abs(te.tip(k, tip) - curve_point(d.W, k, d.dt, tip)) < 1e-9);
    }
  }
}

TEST_CASE("gated hit detection against a brute-force scan") {
  BoundaryHitOptions o;
  o.dt = 1e-3;
  o.T = 1.0;
  o.stride = 1;
  const double lo = 0.3, hi = 0.8, prox = 0.05;
  const double tip = 0.25 * std::sqrt(o.dt);
  const auto p = SleParams::one_right(2.0, 0.0, -1.5);
  int hits = 0;
  for (int r = 0; r < 150; ++r) {
    const auto seed = stream_seed(40, r);
    const bool gated = run_hits_interval(p, lo, hi, prox, seed, o);
    const auto d = simulate_driver(p, o.dt, o.T, seed);
    bool pointHit = false;
    bool segHit = false;
    Point prev{0.0, 0.0};
    for (std::size_t k = 1; k <= d.steps(); ++k) {
      const Point q = curve_point(d.W, k, d.dt, tip);
      pointHit = pointHit || interval_distance(q, lo, hi) <= prox;
      for (int s = 0; s <= 20; ++s) segHit = segHit || interval_distance(prev + (q - prev) * (s / 20.0), lo, hi) <= prox;
      prev = q;
    }
    hits += gated;
    if (pointHit) CHECK(gated);
    if (gated) CHECK(segHit);
  }
  CHECK(hits > 10);
}

TEST_CASE("zero weight hit probability matches plain") {
  BoundaryHitOptions o;
  o.dt = 1e-3;
  o.T = 2.0;
  const auto a = boundary_hit_probability(SleParams::plain(2.0), 0.5, 1.0, 0.05, 400, 50, o);
  const auto b = boundary_hit_probability(SleParams::one_right(2.0, 0.0, 0.0), 0.5, 1.0, 0.05, 400, 51, o);
  CHECK(std::abs(a.estimate - b.estimate) <= 2.0 * std::hypot(a.stdErr, b.stdErr) + 1e-12);
  CHECK_THROWS_AS(boundary_hit_probability(SleParams::one_right(2.0, 0.6, 0.0), 0.5, 1.0, 0.05, 1, 1, o), ParameterError);
}

TEST_CASE("driver scale invariance") {
  // (W_{c^2 t} / c) for a force point at c x has the law of W_t for x
  std::vector<double> a, b;
  const double c = 2.0;
  for (int r = 0; r < 4000; ++r) {
    a.push_back(simulate_driver(SleParams::one_right(2.0, 0.5, 1.0), 1e-3, 1.0, stream_seed(60, r)).W.back());
    b.push_back(simulate_driver(SleParams::one_right(2.0, 0.5 * c, 1.0), 1e-3 * c * c, c * c, stream_seed(61, r)).W.back() / c);
  }
  CHECK(stats::ks_two_sample(a, b) < stats::ks_critical(a.size(), b.size(), 0.01));
}

TEST_CASE("driver files") {
  const auto dir = std::filesystem::temp_directory_path() / "igeom_unit_sle";
  std::filesystem::create_directories(dir);
  const SleParams p{2.0, {0.5}, {-1.0, 0.25}, {-0.2}, {0.0, 1.0}};
  const auto d = simulate_driver(p, 1e-3, 0.2, 3);
  write_driver_csv(dir / "d.csv", d);
  const auto r = read_driver_csv(dir / "d.csv");
  CHECK(r.dt == doctest::Approx(d.dt));
  CHECK(r.W == d.W);
  CHECK(r.VL == d.VL);
  CHECK(r.VR == d.VR);
  const auto q = params_from_json(params_to_json(p));
  CHECK(q.kappa == p.kappa);
  CHECK(q.weightsL == p.weightsL);
  CHECK(q.weightsR == p.weightsR);
  CHECK(q.pointsL == p.pointsL);
  CHECK(q.pointsR == p.pointsR);
  std::filesystem::remove_all(dir);
}
