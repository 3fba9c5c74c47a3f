#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "igeom/flowline.hpp"

using namespace igeom;

namespace {

DiscreteField constant_field(int n, double value, double chi) {
  TriangulatedGrid g(n);
  return DiscreteField{g, std::vector<double>(g.vertex_count(), value), BoundaryTrace::constant(g, value), chi};
}

DiscreteField gff_field(int n, std::uint64_t seed, double kappa) {
  TriangulatedGrid g(n);
  DirichletOperator op(g);
  const auto c = derive_constants(kappa);
  auto f = sample_field(op, seed, BoundaryTrace::constant(g, 0.5 * kPi * c.chi), c.chi);
  return f;
}

// orientation-based transversal test, independent of the library routine
bool crosses(Point p1, Point p2, Point q1, Point q2) {
  auto cr = [](Point o, Point a, Point b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
  };
  const double d1 = cr(q1, q2, p1);
  const double d2 = cr(q1, q2, p2);
  const double d3 = cr(p1, p2, q1);
  const double d4 = cr(p1, p2, q2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

TEST_CASE("constant field gives straight rays") {
  SUBCASE("horizontal") {
    const auto f = constant_field(21, 0.0, 1.0);
    const auto p = trace_flow_line(f, {0.0, 0.3}, 0.0, 0.05, 10.0);
    CHECK(p.termination == Termination::boundaryHit);
    for (const Point& q : p.points) CHECK(q.imag() == doctest::Approx(0.3));
    for (std::size_t k = 1; k < p.points.size(); ++k) CHECK(p.points[k].real() > p.points[k - 1].real());
    CHECK(p.hitPoint.real() == doctest::Approx(1.0));
  }
  SUBCASE("vertical") {
    const double chi = 0.8;
    const auto f = constant_field(21, 0.5 * kPi * chi - 0.2 * chi, chi);
    const auto p = trace_flow_line(f, {0.25, -0.5}, 0.2, 0.05, 10.0);
    for (const Point& q : p.points) CHECK(q.real() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.points.back().imag() > 0.9);
  }
  SUBCASE("max length") {
    const auto f = constant_field(21, 0.0, 1.0);
    const auto p = trace_flow_line(f, {-0.9, 0.0}, 0.0, 0.01, 0.5);
    CHECK(p.termination == Termination::maxLength);
    CHECK(p.points.size() == 51);
    CHECK(p.length() == doctest::Approx(0.5));
  }
}

TEST_CASE("smooth field against fine RK4") {
  // h(z) = |z|^2 on a fine grid, chi = 1
  TriangulatedGrid g(401);
  DiscreteField f{g, std::vector<double>(g.vertex_count()), BoundaryTrace::constant(g, 0.0), 1.0};
  for (std::size_t k = 0; k < g.vertex_count(); ++k) f.vertexValues[k] = std::norm(g.vertex(k));
  const double step = 0.01;
  const auto path = trace_flow_line(f, {0.0, 0.0}, 0.0, step, 0.9);
  auto rhs = [](Point z) { return std::polar(1.0, std::norm(z)); };
  Point z{0.0, 0.0};
  const double h = step / 10.0;
  double worst = 0.0;
  for (std::size_t k = 1; k < path.points.size(); ++k) {
    for (int s = 0; s < 10; ++s) {
      const Point k1 = rhs(z);
      const Point k2 = rhs(z + 0.5 * h * k1);
      const Point k3 = rhs(z + 0.5 * h * k2);
      const Point k4 = rhs(z + h * k3);
      z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    worst = std::max(worst, std::abs(path.points[k] - z));
  }
  CHECK(path.points.size() == 91);
  CHECK(worst <= 2.0 * step);
}

TEST_CASE("degenerate and invalid starts") {
  const auto f = constant_field(11, 0.0, 1.0);
  CHECK_THROWS_AS(trace_flow_line(f, {0.0, -1.0}, -kPi / 2, 0.05, 1.0), DegenerateStartError);
  CHECK_NOTHROW(trace_flow_line(f, {0.0, -1.0}, kPi / 2, 0.05, 1.0));
  CHECK_THROWS_AS(trace_flow_line(f, {2.0, 0.0}, 0.0, 0.05, 1.0), DomainError);
  const auto flat = constant_field(11, 0.0, 0.0);
  CHECK_THROWS_AS(trace_flow_line(flat, {0.0, 0.0}, 0.0, 0.05, 1.0), ParameterError);
}

TEST_CASE("angle-varying flow lines") {
  SUBCASE("single angle equals the fixed-angle trace") {
    const auto f = gff_field(41, 3, 2.0);
    const auto a = trace_angle_varying(f, {0.0, -1.0}, AngleSchedule::single(0.3), 0.025, 5.0);
    const auto b = trace_flow_line(f, {0.0, -1.0}, 0.3, 0.025, 5.0);
    CHECK(a.points == b.points);
    CHECK(a.termination == b.termination);
  }
  SUBCASE("L shape on a constant field") {
    const auto f = constant_field(41, 0.0, 1.0);
    AngleSchedule s{{0.0, kPi / 2}, {1.0}, false};
    const auto p = trace_angle_varying(f, {-0.5, -0.5}, s, 0.05, 1.5);
    REQUIRE(p.points.size() == 31);
    CHECK(std::abs(p.points[20] - Point(0.5, -0.5)) < 1e-12);
    CHECK(std::abs(p.points[30] - Point(0.5, 0.0)) < 1e-12);
    CHECK(p.thetas[20] == 0.0);
    CHECK(p.thetas[21] == doctest::Approx(kPi / 2));
  }
  SUBCASE("restart equivalence on a sampled field") {
    const auto f = gff_field(61, 8, 2.0);
    const double step = f.grid.spacing() / 2;
    AngleSchedule s{{0.0, 0.4}, {0.3}, false};
    const auto p = trace_angle_varying(f, {0.0, -1.0}, s, step, 2.0);
    const auto head = trace_flow_line(f, {0.0, -1.0}, 0.0, step, 0.3);
    REQUIRE(p.points.size() > head.points.size());
    for (std::size_t k = 0; k < head.points.size(); ++k) CHECK(p.points[k] == head.points[k]);
    const auto tail = trace_flow_line(f, head.points.back(), 0.4, step, 2.0 - 0.3);
    REQUIRE(p.points.size() == head.points.size() + tail.points.size() - 1);
    for (std::size_t k = 1; k < tail.points.size(); ++k) {
      CHECK(p.points[head.points.size() - 1 + k] == tail.points[k]);
    }
  }
  SUBCASE("schedule validation") {
    AngleSchedule bad{{0.0, 1.0}, {}, false};
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    AngleSchedule wide{{-4.0, 4.0}, {0.5}, true};  // 2 lambda / chi = 2 pi at kappa 2
    const auto c = derive_constants(2.0);
    CHECK_THROWS_AS(wide.validate(&c), ParameterError);
  }
}

TEST_CASE("light cone") {
  SUBCASE("one iteration is the pair of extreme flow lines") {
    const auto f = gff_field(41, 12, 8.0 / 3.0);
    const auto cone = light_cone(f, {0.0, -0.5}, 1, 0.0);
    REQUIRE(cone.paths.size() == 2);
    const auto up = trace_flow_line(f, {0.0, -0.5}, kPi / 2);
    const auto down = trace_flow_line(f, {0.0, -0.5}, -kPi / 2);
    CHECK(cone.paths[0].points == up.points);
    CHECK(cone.paths[1].points == down.points);
  }
  SUBCASE("constant field stays in the half-plane above the two rays") {
    const double chi = 1.0;
    const auto f = constant_field(41, 0.5 * kPi * chi, chi);
    LightConeOptions o;
    o.iterations = 4;
    o.seedEvery = 3;
    const auto cone = light_cone(f, {0.0, 0.0}, o);
    CHECK(cone.paths[0].points.back().real() < -0.95);
    CHECK(cone.paths[1].points.back().real() > 0.95);
    for (const Point& p : cone.points) CHECK(p.imag() >= -1e-12);
  }
  SUBCASE("point set grows with the iteration count") {
    const auto f = gff_field(61, 4, 2.0);
    LightConeOptions o;
    std::vector<Point> prev;
    for (int it = 1; it <= 4; ++it) {
      o.iterations = it;
      const auto cone = light_cone(f, {0.0, -0.5}, o);
      CHECK(std::is_sorted(cone.generation.begin(), cone.generation.end()));
      REQUIRE(cone.points.size() >= prev.size());
      CHECK(std::equal(prev.begin(), prev.end(), cone.points.begin()));
      prev = cone.points;
    }
  }
  CHECK_THROWS_AS(light_cone(constant_field(11, 0.0, 1.0), {0.0, 0.0}, 0, 0.0), ParameterError);
}

TEST_CASE("fan") {
  const auto f = gff_field(41, 21, 4.0 / 3.0);
  const auto two = fan(f, {0.0, -0.5}, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].points == trace_flow_line(f, {0.0, -0.5}, -kPi / 2).points);
  CHECK(two[1].points == trace_flow_line(f, {0.0, -0.5}, kPi / 2).points);
  const auto angles = fan_angles(5);
  CHECK(angles.front() == doctest::Approx(-kPi / 2));
  CHECK(angles[2] == doctest::Approx(0.0));
  CHECK(angles.back() == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS(fan_angles(1), ParameterError);

  const auto pencil = fan(constant_field(41, 0.5 * kPi, 1.0), {0.0, 0.0}, 5);
  for (std::size_t j = 0; j < pencil.size(); ++j) {
    const Point d = pencil[j].points[4] - pencil[j].points[0];
    CHECK(std::arg(d) == doctest::Approx(kPi / 2 + angles[j]));
  }
}

TEST_CASE("crossings") {
  CHECK_FALSE(segment_crossing({0, 0}, {1, 0}, {0, 1}, {1, 1}).has_value());
  const auto x = segment_crossing({-1, -1}, {1, 1}, {-1, 1}, {1, -1});
  REQUIRE(x.has_value());
  CHECK(std::abs(x->point) < 1e-14);
  CHECK(x->paramA == doctest::Approx(0.5));
  // touching at an endpoint is not transversal
  CHECK_FALSE(segment_crossing({0, 0}, {1, 0}, {1, 0}, {1, 1}).has_value());

  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> a(30), b(30);
    for (auto& p : a) p = {u(eng), u(eng)};
    for (auto& p : b) p = {u(eng), u(eng)};
    std::vector<std::pair<std::size_t, std::size_t>> brute;
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
      for (std::size_t j = 0; j + 1 < b.size(); ++j)
        if (crosses(a[i], a[i + 1], b[j], b[j + 1])) brute.emplace_back(i, j);
    const auto got = detect_crossings(a, b);
    REQUIRE(got.size() == brute.size());
    std::set<std::pair<std::size_t, std::size_t>> gs;
    for (const auto& c : got) gs.insert({c.segmentA, c.segmentB});
    CHECK(gs == std::set<std::pair<std::size_t, std::size_t>>(brute.begin(), brute.end()));
    for (std::size_t k = 1; k < got.size(); ++k) CHECK(got[k].paramA >= got[k - 1].paramA);
    const auto first = detect_first_crossing(a, b);
    CHECK(first.has_value() == !brute.empty());
    if (first) CHECK(first->segmentA == std::min_element(brute.begin(), brute.end())->first);
  }
}

TEST_CASE("merge detection") {
  std::vector<Point> a;
  for (int k = 0; k <= 100; ++k) a.push_back({0.01 * k, 0.2 * std::sin(0.05 * k)});
  CHECK(detect_merge(a, a, 0.01) == std::optional<std::size_t>(0));
  std::vector<Point> far = a;
  for (auto& p : far) p += Point(0.0, 5.0);
  CHECK_FALSE(detect_merge(a, far, 0.01).has_value());
  // b approaches a from above and joins it at vertex 60
  std::vector<Point> b;
  for (int k = 0; k <= 100; ++k) {
    const double lift = k < 60 ? 0.3 * (60 - k) / 60.0 + 0.05 : 0.0;
    b.push_back(a[k] + Point(0.0, lift));
  }
  const auto m = detect_merge(b, a, 0.02);
  REQUIRE(m.has_value());
  CHECK(*m >= 59);
  CHECK(*m <= 61);
  CHECK_THROWS_AS(detect_merge(a, a, 0.0), ParameterError);
}

TEST_CASE("distances") {
  const std::vector<Point> a{{0, 0}, {1, 0}};
  const std::vector<Point> b{{0, 1}, {1, 1}, {1, 3}};
  CHECK(point_segment_distance({0.5, 2}, {0, 0}, {1, 0}) == doctest::Approx(2.0));
  CHECK(point_segment_distance({-3, 4}, {0, 0}, {1, 0}) == doctest::Approx(5.0));
  CHECK(directed_hausdorff(a, b) == doctest::Approx(1.0));
  CHECK(directed_hausdorff(b, a) == doctest::Approx(3.0));
  CHECK(min_distance(a, b) == doctest::Approx(1.0));
  PolylineIndex idx(b);
  CHECK(idx.distance({2, 2}) == doctest::Approx(1.0));
  CHECK(std::isinf(idx.distance_within({5, 5}, 0.5)));
}

TEST_CASE("path csv round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "igeom_unit_flow";
  std::filesystem::create_directories(dir);
  const auto f = gff_field(41, 6, 2.0);
  const auto p = trace_flow_line(f, {0.0, -1.0}, 0.2);
  write_path_csv(dir / "p.csv", p);
  const auto r = read_path_csv(dir / "p.csv");
  REQUIRE(r.points.size() == p.points.size());
  for (std::size_t k = 0; k < p.points.size(); ++k) CHECK(r.points[k] == p.points[k]);
  const auto ps = fan(f, {0.0, -0.5}, 3);
  write_paths_csv(dir / "fan.csv", ps);
  const auto rs = read_paths_csv(dir / "fan.csv");
  REQUIRE(rs.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(rs[j].points == ps[j].points);
  std::filesystem::remove_all(dir);
}
