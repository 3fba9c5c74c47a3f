#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "igeom/coupling.hpp"

using namespace igeom;

namespace {

// Bounded harmonic extension by integrating the Poisson kernel piece by piece.
double poisson_integral(const HarmonicProfile& p, Point w) {
  const double x = w.real();
  const double y = w.imag();
  auto kernel = [&](double s) { return y / (kPi * ((x - s) * (x - s) + y * y)); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  boost::math::quadrature::exp_sinh<double> tail;
  const auto& j = p.jumps;
  double sum = 0.0;
  if (j.empty()) return p.values.front();
  sum += p.values.front() * tail.integrate([&](double t) { return kernel(j.front() - t); }, 0.0, INFINITY);
  for (std::size_t k = 0; k + 1 < j.size(); ++k) {
    if (j[k + 1] > j[k]) sum += p.values[k + 1] * GK::integrate(kernel, j[k], j[k + 1], 20, 1e-14);
  }
  sum += p.values.back() * tail.integrate([&](double t) { return kernel(j.back() + t); }, 0.0, INFINITY);
  return sum;
}

}  // namespace

TEST_CASE("profile without force points") {
  const auto p = HarmonicProfile::initial(SleParams::plain(2.0));
  const double lam = derive_constants(2.0).lambda;
  CHECK(harmonic_profile_value(p, -0.5) == doctest::Approx(-lam));
  CHECK(harmonic_profile_value(p, 0.5) == doctest::Approx(lam));
  CHECK(harmonic_profile_value(p, 0.0, Side::Left) == doctest::Approx(-lam));
  CHECK(harmonic_profile_value(p, 0.0, Side::Right) == doctest::Approx(lam));
}

TEST_CASE("profile jumps carry lambda times the weight") {
  const double kappa = 3.0;
  const double lam = derive_constants(kappa).lambda;
  const SleParams params{kappa, {0.7, -1.1}, {0.4, -2.0, 1.3}, {-0.5, -2.0}, {0.0, 1.0, 3.0}};
  const auto p = HarmonicProfile::initial(params);
  REQUIRE(p.jumps.size() == 6);
  REQUIRE(p.values.size() == 7);
  CHECK(harmonic_profile_value(p, 0.5) == doctest::Approx(lam * 1.4));
  CHECK(harmonic_profile_value(p, 2.0) == doctest::Approx(lam * (1.4 - 2.0)));
  CHECK(harmonic_profile_value(p, 5.0) == doctest::Approx(lam * (1.4 - 2.0 + 1.3)));
  CHECK(harmonic_profile_value(p, -1.0) == doctest::Approx(-lam * 1.7));
  CHECK(harmonic_profile_value(p, -3.0) == doctest::Approx(-lam * (1.7 - 1.1)));
  // each force point contributes exactly one jump of size lambda * rho (0 is the driver jump)
  std::vector<double> sizes;
  for (std::size_t k = 0; k + 1 < p.values.size(); ++k) sizes.push_back(p.values[k + 1] - p.values[k]);
  CHECK(sizes[0] == doctest::Approx(lam * -1.1));
  CHECK(sizes[1] == doctest::Approx(lam * 0.7));
  CHECK(sizes[2] == doctest::Approx(2.0 * lam));
  CHECK(sizes[3] == doctest::Approx(lam * 0.4));
  CHECK(sizes[4] == doctest::Approx(lam * -2.0));
  CHECK(sizes[5] == doctest::Approx(lam * 1.3));
}

TEST_CASE("weights summing to -2 on the right") {
  const double lam = derive_constants(2.0).lambda;
  const SleParams params{2.0, {}, {-0.5, -1.5}, {}, {0.5, 1.0}};
  const auto p = HarmonicProfile::initial(params);
  CHECK(harmonic_profile_value(p, 10.0) == doctest::Approx(-lam));
}

TEST_CASE("h at time 0 with no force points") {
  const auto p = HarmonicProfile::initial(SleParams::plain(2.0));
  const auto o = observe(p, initial_map_state({0.0, 1.0}, 0.0), 0.0);
  CHECK(std::abs(o.hValue) < 1e-14);
  CHECK(o.logCR == doctest::Approx(std::log(2.0)));
}

TEST_CASE("h_t along the vertical slit") {
  const double kappa = 2.0;
  const auto c = derive_constants(kappa);
  const auto params = SleParams::plain(kappa);
  const auto d = zero_driver(1e-3, 1.0);
  const Point z{1.0, 1.0};
  const auto obs = evaluate_h_t(d, loewner_forward(d, z), params);
  REQUIRE(obs.size() == d.W.size());
  for (const auto& o : obs) {
    const Point f = std::sqrt(z * z + 4.0 * o.t);
    const double u = c.lambda - 2.0 * c.lambda / kPi * std::arg(f);
    const double want = u - c.chi * std::arg(z / f);
    CHECK(o.hValue == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("harmonic extension against Poisson quadrature") {
  std::mt19937_64 eng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    SleParams params = SleParams::plain(0.5 + 5.0 * u(eng));
    const int nl = static_cast<int>(3 * u(eng));
    const int nr = static_cast<int>(3 * u(eng));
    double x = 0.0;
    for (int i = 0; i < nl; ++i) {
      x -= 0.1 + u(eng);
      params.pointsL.push_back(x);
      params.weightsL.push_back(-1.0 + 3.0 * u(eng));
    }
    x = 0.0;
    for (int i = 0; i < nr; ++i) {
      x += 0.1 + u(eng);
      params.pointsR.push_back(x);
      params.weightsR.push_back(-1.0 + 3.0 * u(eng));
    }
    const auto p = HarmonicProfile::initial(params);
    const Point w{-2.0 + 4.0 * u(eng), 0.05 + 2.0 * u(eng)};
    CHECK(std::abs(harmonic_extension_value(p, w) - poisson_integral(p, w)) < 1e-8);
  }
}

TEST_CASE("martingale test") {
  CouplingOptions o;
  o.dt = 1e-3;
  const auto zero = martingale_test(SleParams::plain(2.0), {0.0, 1.0}, 0.0, 50, 1, o);
  CHECK(zero.mean == 0.0);
  const auto r = martingale_test(SleParams::plain(2.0), {0.0, 1.0}, 0.1, 1000, 2, o);
  CHECK(r.runs + r.swallowed == 1000);
  CHECK(std::abs(r.mean) <= 3.0 * r.stdErr);
  CHECK(r.pass);
  CHECK_THROWS_AS(martingale_test(SleParams::plain(2.0), {0.0, -1.0}, 0.1, 10, 1, o), ParameterError);
}

TEST_CASE("variance test arguments") {
  CHECK_THROWS_AS(variance_vs_logCR_test(SleParams::plain(2.0), {0.0, 1.0}, 0.04, 10, 1), ParameterError);
  CHECK_THROWS_AS(variance_vs_logCR_test(SleParams::plain(2.0), {0.0, 1.0}, 0.0, 10, 1), ParameterError);
}

TEST_CASE("log conformal radius decreases along the flow") {
  const auto params = SleParams::one_right(2.0, 0.5, 1.0);
  const auto d = simulate_driver(params, 1e-3, 2.0, 77);
  const auto obs = evaluate_h_t(d, loewner_forward(d, {0.3, 1.2}), params);
  REQUIRE(obs.size() > 10);
  for (std::size_t k = 1; k < obs.size(); ++k) CHECK(obs[k].logCR <= obs[k - 1].logCR + 1e-12);
}

TEST_CASE("h_t moves by about the square root of the log-CR drop per step") {
  const auto params = SleParams::plain(2.0);
  const auto d = simulate_driver(params, 1e-4, 0.5, 5);
  const auto obs = evaluate_h_t(d, loewner_forward(d, {0.0, 1.0}), params);
  REQUIRE(obs.size() > 100);
  double worst = 0.0;
  for (std::size_t k = 1; k < obs.size(); ++k) {
    const double drop = obs[k - 1].logCR - obs[k].logCR;
    if (drop > 0.0) worst = std::max(worst, std::abs(obs[k].hValue - obs[k - 1].hValue) / std::sqrt(drop));
  }
  CHECK(worst < 10.0);
}
