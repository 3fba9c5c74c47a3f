#include "igeom/sle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "igeom/stats.hpp"

namespace igeom {

// ---------------------------------------------------------------------------
// Bessel

double bessel_exact_step(double delta, double x, double dt, Rng& rng) {
  return std::sqrt(dt * rng.noncentral_chi_square(delta, x * x / dt));
}

std::vector<double> simulate_bessel(double delta, double x0, double dt, double T,
                                    std::uint64_t seed) {
  if (!(delta > 1.0)) throw ParameterError("delta: must exceed 1");
  if (!(x0 >= 0.0)) throw ParameterError("x0: must be non-negative");
  if (!(dt > 0.0) || !(T >= 0.0)) throw ParameterError("dt, T: need dt > 0 and T >= 0");
  Rng rng(seed);
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  const double sdt = std::sqrt(dt);
  const double cut = 3.0 * sdt;
  std::vector<double> xs;
  xs.reserve(steps + 1);
  double x = x0;
  xs.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    if (x >= cut) {
      x = std::abs(x + 0.5 * (delta - 1.0) / x * dt + sdt * rng.normal());
    } else {
      x = bessel_exact_step(delta, x, dt, rng);
    }
    xs.push_back(x);
  }
  return xs;
}

// ---------------------------------------------------------------------------
// Driver

DriverStepper::DriverStepper(const SleParams& params, double dt, std::uint64_t seed)
    : kappa_(params.kappa), sqrtKappa_(std::sqrt(params.kappa)), dt_(dt), rng_(seed) {
  params.validate();
  if (!(dt > 0.0)) throw ParameterError("dt: must be positive");
  for (std::size_t i = 0; i < params.pointsL.size(); ++i) {
    left_.push_back({params.pointsL[i], params.weightsL[i], {i}});
    groupOfL_.push_back(i);
  }
  for (std::size_t i = 0; i < params.pointsR.size(); ++i) {
    right_.push_back({params.pointsR[i], params.weightsR[i], {i}});
    groupOfR_.push_back(i);
  }
  const bool zeroL = !left_.empty() && left_.front().V == 0.0;
  const bool zeroR = !right_.empty() && right_.front().V == 0.0;
  if ((zeroL && continuation_threshold_hit({left_.front().weight})) ||
      (zeroR && continuation_threshold_hit({right_.front().weight}))) {
    threshold_ = 0.0;
    return;
  }
  if (zeroL && zeroR) {
    const double gap = std::exp(kMicroscopicGapLog);
    left_.front().V = -gap;
    right_.front().V = gap;
  }
}

std::size_t DriverStepper::count(Side side) const {
  return side == Side::Left ? groupOfL_.size() : groupOfR_.size();
}

double DriverStepper::V(Side side, std::size_t i) const {
  return side == Side::Left ? left_[groupOfL_[i]].V : right_[groupOfR_[i]].V;
}

double DriverStepper::drift(double w) const {
  double d = 0.0;
  for (const Group& g : left_) d += g.weight / (w - g.V);
  for (const Group& g : right_) d += g.weight / (w - g.V);
  return d;
}

void DriverStepper::coalesce(Side side) {
  auto& groups = side == Side::Left ? left_ : right_;
  auto& groupOf = side == Side::Left ? groupOfL_ : groupOfR_;
  bool merged = false;
  for (std::size_t k = 0; k + 1 < groups.size();) {
    const bool overtaken = side == Side::Left ? groups[k + 1].V >= groups[k].V
                                              : groups[k + 1].V <= groups[k].V;
    if (!overtaken) {
      ++k;
      continue;
    }
    merges_.push_back({side, groups[k + 1].members.front(), groups[k].members.front(), time()});
    groups[k].weight += groups[k + 1].weight;
    groups[k].members.insert(groups[k].members.end(), groups[k + 1].members.begin(),
                             groups[k + 1].members.end());
    groups.erase(groups.begin() + static_cast<long>(k) + 1);
    merged = true;
  }
  if (merged) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t m : groups[g].members) groupOf[m] = g;
    }
  }
}

void DriverStepper::euler_step(double z, double h, double tEnd) {
  const double w = W_;
  double wn = w + drift(w) * h + sqrtKappa_ * std::sqrt(h) * z;
  for (Group& g : left_) g.V += 2.0 * h / (g.V - w);
  for (Group& g : right_) g.V += 2.0 * h / (g.V - w);
  if (!left_.empty() && wn <= left_.front().V) {
    if (continuation_threshold_hit({left_.front().weight})) {
      W_ = left_.front().V;
      threshold_ = tEnd;
      return;
    }
    wn = 2.0 * left_.front().V - wn;
  }
  if (!right_.empty() && wn >= right_.front().V) {
    if (continuation_threshold_hit({right_.front().weight})) {
      W_ = right_.front().V;
      threshold_ = tEnd;
      return;
    }
    wn = 2.0 * right_.front().V - wn;
  }
  if (!left_.empty() && !right_.empty() && (wn <= left_.front().V || wn >= right_.front().V)) {
    wn = 0.5 * (left_.front().V + right_.front().V);
  }
  W_ = wn;
}

void DriverStepper::collision_step(Side side, double h, double tEnd) {
  const double w = W_;
  auto& groups = side == Side::Left ? left_ : right_;
  Group& near = groups.front();
  const double sign = side == Side::Right ? 1.0 : -1.0;
  const double x = std::max(0.0, sign * (near.V - w)) / sqrtKappa_;
  double other = 0.0;
  for (const Group& g : left_) {
    if (&g != &near) other += g.weight / (w - g.V);
  }
  for (const Group& g : right_) {
    if (&g != &near) other += g.weight / (w - g.V);
  }
  const double delta = bessel_dimension(kappa_, near.weight);
  double xn = bessel_exact_step(delta, x, h, rng_);
  xn = std::abs(xn - sign * other * h / sqrtKappa_);
  const double mean = std::max(0.5 * (x + xn), 0.05 * std::sqrt(h));
  for (Group& g : left_) {
    if (&g != &near) g.V += 2.0 * h / (g.V - w);
  }
  for (Group& g : right_) {
    if (&g != &near) g.V += 2.0 * h / (g.V - w);
  }
  near.V += sign * 2.0 * h / (sqrtKappa_ * mean);
  double wn = near.V - sign * sqrtKappa_ * xn;
  auto& opposite = side == Side::Left ? right_ : left_;
  if (!opposite.empty()) {
    const double v = opposite.front().V;
    if (sign * (v - wn) >= 0.0) {
      if (continuation_threshold_hit({opposite.front().weight})) {
        W_ = v;
        threshold_ = tEnd;
        return;
      }
      wn = 2.0 * v - wn;
      if (sign * (near.V - wn) < 0.0 || sign * (v - wn) >= 0.0) wn = 0.5 * (near.V + v);
    }
  }
  W_ = wn;
}

void DriverStepper::substep(double h, double tEnd) {
  const double z = rng_.normal();
  const double inf = std::numeric_limits<double>::infinity();
  const double gapL = left_.empty() ? inf : W_ - left_.front().V;
  const double gapR = right_.empty() ? inf : right_.front().V - W_;
  const double cut = 3.0 * std::sqrt(kappa_ * h);
  if (std::min(gapL, gapR) < cut) {
    const Side side = gapL <= gapR ? Side::Left : Side::Right;
    const Group& g = side == Side::Left ? left_.front() : right_.front();
    if (!continuation_threshold_hit({g.weight})) {
      lastCollision_ = true;
      collision_step(side, h, tEnd);
      return;
    }
  }
  euler_step(z, h, tEnd);
}

bool DriverStepper::step() {
  if (threshold_) return false;
  lastCollision_ = false;
  const double t0 = time();
  const double cut = 3.0 * std::sqrt(kappa_ * dt_);
  const bool pinched = !left_.empty() && !right_.empty() &&
                       W_ - left_.front().V < cut && right_.front().V - W_ < cut;
  if (!pinched) {
    substep(dt_, t0 + dt_);
  } else {
    // Both sides close: the far force point is Euler-stepped, so resolve its gap.
    double elapsed = 0.0;
    while (elapsed < dt_ && !threshold_) {
      const double far = std::max(W_ - left_.front().V, right_.front().V - W_);
      const double h = std::min(dt_ - elapsed, std::max(0.04 * far * far / kappa_, 1e-12 * dt_));
      elapsed = h < dt_ - elapsed ? elapsed + h : dt_;
      substep(h, t0 + elapsed);
      coalesce(Side::Left);
      coalesce(Side::Right);
    }
  }
  ++steps_;
  coalesce(Side::Left);
  coalesce(Side::Right);
  return true;
}

DriverPath simulate_driver(const SleParams& params, double dt, double T, std::uint64_t seed) {
  if (!(T >= 0.0)) throw ParameterError("T: must be non-negative");
  DriverStepper s(params, dt, seed);
  DriverPath d;
  d.dt = dt;
  d.VL.resize(params.pointsL.size());
  d.VR.resize(params.pointsR.size());
  auto record = [&]() {
    d.W.push_back(s.W());
    for (std::size_t i = 0; i < d.VL.size(); ++i) d.VL[i].push_back(s.V(Side::Left, i));
    for (std::size_t i = 0; i < d.VR.size(); ++i) d.VR[i].push_back(s.V(Side::Right, i));
  };
  record();
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  for (std::size_t k = 0; k < steps; ++k) {
    if (!s.step()) break;
    record();
    if (s.threshold_time()) break;
  }
  d.thresholdTime = s.threshold_time();
  d.mergedGroups = s.merges();
  return d;
}

DriverPath deterministic_driver(double dt, double T, double (*f)(double)) {
  if (!(dt > 0.0)) throw ParameterError("dt: must be positive");
  DriverPath d;
  d.dt = dt;
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  for (std::size_t k = 0; k <= steps; ++k) d.W.push_back(f(static_cast<double>(k) * dt));
  return d;
}

DriverPath zero_driver(double dt, double T) {
  return deterministic_driver(dt, T, [](double) { return 0.0; });
}

double collision_occupation(const DriverPath& d, Side side, std::size_t index, double window) {
  const auto& V = side == Side::Left ? d.VL.at(index) : d.VR.at(index);
  if (d.W.size() < 2) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 1; k < d.W.size(); ++k) {
    if (std::abs(d.W[k] - V[k]) < window) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(d.W.size() - 1);
}

// ---------------------------------------------------------------------------
// Loewner

Point sqrt_upper(Point u, double side) {
  Point s = std::sqrt(u);
  if (s.imag() < 0.0) s = -s;
  if (s.imag() == 0.0 && s.real() * side < 0.0) s = -s;
  return s;
}

double MapState::log_conformal_radius(double W) const {
  return std::log(2.0 * (g - W).imag()) - logDeriv.real();
}

MapState initial_map_state(Point z, double W0) {
  MapState s;
  s.trackedPoint = z;
  s.g = z;
  if (std::abs(z - W0) < kSwallowCutoff) s.swallowed = true;
  return s;
}

void loewner_advance(MapState& s, double Wnext, double dt) {
  s.t += dt;
  if (s.swallowed) return;
  const Point w = s.g - Wnext;
  const Point r = sqrt_upper(w * w + 4.0 * dt, w.real());
  s.g = Wnext + r;
  s.logDeriv += std::log(w / r);
  if (std::abs(r) < kSwallowCutoff) {
    s.swallowed = true;
    s.swallowTime = s.t;
  }
}

std::vector<MapState> loewner_forward(const DriverPath& driver, Point z) {
  std::vector<MapState> out;
  if (driver.W.empty()) return out;
  MapState s = initial_map_state(z, driver.W.front());
  out.push_back(s);
  if (s.swallowed) return out;
  for (std::size_t k = 1; k < driver.W.size(); ++k) {
    loewner_advance(s, driver.W[k], driver.dt);
    out.push_back(s);
    if (s.swallowed) break;
  }
  return out;
}

Point curve_point(const std::vector<double>& W, std::size_t k, double dt, double tipOffset) {
  if (k == 0) return {0.0, 0.0};
  Point z{W[k], tipOffset};
  for (std::size_t j = k; j >= 1; --j) {
    const Point u = z - W[j];
    z = W[j] + sqrt_upper(u * u - 4.0 * dt, u.real());
  }
  return z;
}

CurvePolyline extract_curve(const DriverPath& driver, double tipOffset, std::size_t stride) {
  if (!(tipOffset > 0.0)) throw ParameterError("tipOffset: must be positive");
  if (stride == 0) throw ParameterError("stride: must be positive");
  CurvePolyline c;
  c.dt = driver.dt;
  c.tipOffset = tipOffset;
  TraceEvaluator trace(driver.dt);
  for (double w : driver.W) trace.push(w);
  for (std::size_t k = 0; k < driver.W.size(); k += stride) {
    c.vertices.push_back(trace.tip(k, tipOffset));
    c.times.push_back(static_cast<double>(k) * driver.dt);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Trace evaluation

namespace {

constexpr int kTerms = TraceEvaluator::kOrder + 2;  // x^0 .. x^{order+1}
using Poly = std::array<double, kTerms>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r{};
  for (int i = 0; i < kTerms; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; i + j < kTerms; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

// Power series square root and reciprocal, both for a[0] = 1.
Poly poly_sqrt(const Poly& d) {
  Poly c{};
  c[0] = 1.0;
  for (int n = 1; n < kTerms; ++n) {
    double s = d[n];
    for (int k = 1; k < n; ++k) s -= c[k] * c[n - k];
    c[n] = 0.5 * s;
  }
  return c;
}

Poly poly_inv(const Poly& a) {
  Poly r{};
  r[0] = 1.0;
  for (int n = 1; n < kTerms; ++n) {
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += a[k] * r[n - k];
    r[n] = -s;
  }
  return r;
}

}  // namespace

TraceEvaluator::TraceEvaluator(double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ParameterError("dt: must be positive");
}

Point TraceEvaluator::Series::operator()(Point z) const {
  const Point x = 1.0 / (z - center);
  Point sum = a[kOrder];
  for (int n = kOrder - 1; n >= 1; --n) sum = sum * x + a[n];
  return z + a[0] + sum * x;
}

void TraceEvaluator::push(double w) {
  W_.push_back(w);
  const std::size_t k = steps();
  std::size_t size = kFan;
  for (int l = 0; l < kLevels && k > 0 && k % size == 0; ++l, size *= kFan) {
    blocks_[l].push_back(l == 0 ? build(k - size + 1, k) : compose(l, blocks_[l - 1].size() - kFan));
  }
}

TraceEvaluator::Series TraceEvaluator::build(std::size_t first, std::size_t last) const {
  Series s;
  double mean = 0.0;
  for (std::size_t j = first; j <= last; ++j) mean += W_[j];
  s.center = mean / static_cast<double>(last - first + 1);
  double spread = 0.0;
  for (std::size_t j = first; j <= last; ++j) spread = std::max(spread, std::abs(W_[j] - s.center));
  s.radius = spread + 2.0 * std::sqrt(static_cast<double>(last - first + 1) * dt_);
  // Left-compose the slit maps, latest first.
  for (std::size_t j = last + 1; j-- > first;) {
    Poly A{};
    A[0] = 1.0;
    A[1] = s.center + s.a[0] - W_[j];
    for (int n = 1; n <= kOrder; ++n) A[n + 1] = s.a[n];
    Poly D = poly_mul(A, A);
    D[2] -= 4.0 * dt_;
    const Poly C = poly_sqrt(D);
    s.a[0] = W_[j] - s.center + C[1];
    for (int n = 1; n <= kOrder; ++n) s.a[n] = C[n + 1];
  }
  return s;
}

TraceEvaluator::Series TraceEvaluator::compose(int level, std::size_t firstChild) const {
  const std::vector<Series>& children = blocks_[level - 1];
  std::size_t size = 1;
  for (int l = 0; l < level; ++l) size *= kFan;
  const std::size_t first = firstChild * size + 1;
  const std::size_t last = first + size * kFan - 1;
  Series s;
  double mean = 0.0;
  for (std::size_t j = first; j <= last; ++j) mean += W_[j];
  s.center = mean / static_cast<double>(last - first + 1);
  double spread = 0.0;
  for (std::size_t j = first; j <= last; ++j) spread = std::max(spread, std::abs(W_[j] - s.center));
  s.radius = spread + 2.0 * std::sqrt(static_cast<double>(last - first + 1) * dt_);
  // s <- child o s, latest child first. With v = y - c_child = u A(x):
  // child(y) = y + o_0 + sum o_m x^m A^-m.
  for (std::size_t c = firstChild + kFan; c-- > firstChild;) {
    const Series& o = children[c];
    Poly A{};
    A[0] = 1.0;
    A[1] = s.center + s.a[0] - o.center;
    for (int n = 1; n <= kOrder; ++n) A[n + 1] = s.a[n];
    Poly q = poly_inv(A);
    for (int n = kTerms - 1; n >= 1; --n) q[n] = q[n - 1];
    q[0] = 0.0;
    s.a[0] += o.a[0];
    Poly qm = q;
    for (int mm = 1; mm <= kOrder; ++mm) {
      for (int n = mm; n <= kOrder; ++n) s.a[n] += o.a[mm] * qm[n];
      if (mm < kOrder) qm = poly_mul(qm, q);
    }
  }
  return s;
}

Point TraceEvaluator::apply(Point z, int level, std::size_t index) const {
  if (level < 0) {
    const double w = W_[index + 1];
    const Point u = z - w;
    return w + sqrt_upper(u * u - 4.0 * dt_, u.real());
  }
  const Series& s = blocks_[level][index];
  if (std::abs(z - s.center) > kFar * s.radius) return s(z);
  for (std::size_t c = (index + 1) * kFan; c-- > index * kFan;) z = apply(z, level - 1, c);
  return z;
}

Point TraceEvaluator::pull_back(Point z, std::size_t k) const {
  if (k > steps()) throw ParameterError("pull_back: step beyond the driver");
  std::size_t j = k;
  while (j > 0) {
    // Largest stored block ending at step j.
    int level = -1;
    std::size_t size = 1;
    for (int l = 0; l < kLevels; ++l) {
      const std::size_t next = size * kFan;
      if (j % next != 0 || j / next > blocks_[l].size()) break;
      level = l;
      size = next;
    }
    z = apply(z, level, j / size - 1);
    j -= size;
  }
  return z;
}

Point TraceEvaluator::tip(std::size_t k, double tipOffset) const {
  if (k == 0) return {0.0, 0.0};
  return pull_back({W_[k], tipOffset}, k);
}

namespace {

double distance_to_interval(Point p, double lo, double hi) {
  const double x = std::clamp(p.real(), lo, hi);
  return std::abs(p - Point{x, 0.0});
}

double segment_interval_distance(Point a, Point b, double lo, double hi) {
  // Minimum over the segment of a convex function; ternary search is exact enough.
  double l = 0.0, r = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = l + (r - l) / 3.0;
    const double m2 = r - (r - l) / 3.0;
    if (distance_to_interval(a + m1 * (b - a), lo, hi) < distance_to_interval(a + m2 * (b - a), lo, hi)) {
      r = m2;
    } else {
      l = m1;
    }
  }
  return std::min({distance_to_interval(a, lo, hi), distance_to_interval(b, lo, hi),
                   distance_to_interval(a + 0.5 * (l + r) * (b - a), lo, hi)});
}

}  // namespace

bool run_hits_interval(const SleParams& params, double lo, double hi, double proximity,
                       std::uint64_t seed, const BoundaryHitOptions& opts) {
  const double tip = opts.tipOffset > 0.0 ? opts.tipOffset : 0.25 * std::sqrt(opts.dt);
  const double dt = opts.dt;
  DriverStepper s(params, dt, seed);
  TraceEvaluator trace(dt);
  trace.push(s.W());
  if (distance_to_interval({0.0, 0.0}, lo, hi) <= proximity) return true;
  const auto steps = static_cast<std::size_t>(std::llround(opts.T / dt));

  // Images of grid points of [lo, hi] and of the two feet of the hull. With
  // D the distance from g(x) to the feet, dist(x, hull) >= D / (4 g'(x)) by
  // Koebe's quarter theorem, and a trace point within eps of x then has
  // |W + i tip - g(x)| <= g'(x) eps / (1 - r)^2, r = 4 g'(x) eps / D, by the
  // growth theorem. The trace is evaluated only when that bound allows a hit.
  struct Tracked {
    double g;
    double deriv;
    double side;
    bool absorbed;
  };
  const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / (0.5 * proximity))));
  const double eps = proximity + 0.5 * (hi - lo) / m;
  std::vector<Tracked> grid;
  for (int j = 0; j <= m; ++j) {
    const double x = lo + (hi - lo) * j / m;
    grid.push_back({x, 1.0, x > s.W() ? 1.0 : -1.0, false});
  }
  double footR = s.W();
  double footL = s.W();

  Point prev{0.0, 0.0};
  std::size_t prevK = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    if (!s.step()) break;
    const double w = s.W();
    trace.push(w);
    footR = w + std::sqrt(std::pow(std::max(footR - w, 0.0), 2) + 4.0 * dt);
    footL = w - std::sqrt(std::pow(std::max(w - footL, 0.0), 2) + 4.0 * dt);
    bool live = false;
    bool near = false;
    bool touched = false;
    for (Tracked& x : grid) {
      if (x.absorbed) continue;
      const double u = x.g - w;
      if (u * x.side <= 0.0) {
        // The driver passed x: the hull reached the real line beyond it.
        x.absorbed = true;
        touched = true;
        continue;
      }
      const double r = std::copysign(std::sqrt(u * u + 4.0 * dt), u);
      x.g = w + r;
      x.deriv *= u / r;
      live = true;
      if (near) continue;
      const double D = x.side > 0.0 ? x.g - footR : footL - x.g;
      const double ratio = 4.0 * x.deriv * eps / D;  // eps / (lower bound on dist(x, hull))
      if (ratio >= 1.0) {
        near = true;
        continue;
      }
      const double reach = x.deriv * eps / ((1.0 - ratio) * (1.0 - ratio)) * (1.0 + 1e-9);
      if (r * r + tip * tip <= reach * reach) near = true;
    }
    const bool last = k == steps || s.threshold_time().has_value();
    if (touched || (near && (k % opts.stride == 0 || last))) {
      const Point p = trace.tip(k, tip);
      const double d = k - prevK <= opts.stride ? segment_interval_distance(prev, p, lo, hi)
                                                : distance_to_interval(p, lo, hi);
      if (d <= proximity) return true;
      prev = p;
      prevK = k;
    }
    // Every grid point is enclosed by the hull; the trace stays outside.
    if (!live || last) break;
  }
  return false;
}

Estimate boundary_hit_probability(const SleParams& params, double lo, double hi, double proximity,
                                  std::size_t runs, std::uint64_t seed,
                                  const BoundaryHitOptions& opts) {
  params.validate();
  if (!(lo < hi)) throw ParameterError("interval: need lo < hi");
  if (!(proximity > 0.0)) throw ParameterError("proximity: must be positive");
  for (double x : params.pointsL) {
    if (x >= lo - proximity && x <= hi + proximity) throw ParameterError("interval: meets a force point");
  }
  for (double x : params.pointsR) {
    if (x >= lo - proximity && x <= hi + proximity) throw ParameterError("interval: meets a force point");
  }
  std::vector<double> hits(runs, 0.0);
  for (std::size_t r = 0; r < runs; ++r) {
    hits[r] = run_hits_interval(params, lo, hi, proximity, stream_seed(seed, r), opts) ? 1.0 : 0.0;
  }
  const auto sum = stats::summarize(hits);
  return {sum.mean, sum.std_error(), runs};
}

// ---------------------------------------------------------------------------
// Files

void write_driver_csv(const std::filesystem::path& path, const DriverPath& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "t,W";
  for (std::size_t i = 0; i < d.VL.size(); ++i) out << ",V_" << i + 1 << "L";
  for (std::size_t i = 0; i < d.VR.size(); ++i) out << ",V_" << i + 1 << "R";
  out << '\n';
  for (std::size_t k = 0; k < d.W.size(); ++k) {
    out << static_cast<double>(k) * d.dt << ',' << d.W[k];
    for (const auto& v : d.VL) out << ',' << v[k];
    for (const auto& v : d.VR) out << ',' << v[k];
    out << '\n';
  }
}

DriverPath read_driver_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,W", 0) != 0) throw std::runtime_error(path.string() + ": bad header");
  std::size_t nl = 0, nr = 0;
  for (std::size_t pos = line.find(",V_"); pos != std::string::npos; pos = line.find(",V_", pos + 1)) {
    const std::size_t end = line.find(',', pos + 1);
    const char side = line[(end == std::string::npos ? line.size() : end) - 1];
    (side == 'L' ? nl : nr) += 1;
  }
  DriverPath d;
  d.VL.assign(nl, {});
  d.VR.assign(nr, {});
  std::vector<double> ts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t = 0.0, w = 0.0;
    if (!(row >> t >> w)) throw std::runtime_error(path.string() + ": bad row");
    ts.push_back(t);
    d.W.push_back(w);
    for (auto& v : d.VL) { double x; if (!(row >> x)) throw std::runtime_error(path.string() + ": bad row"); v.push_back(x); }
    for (auto& v : d.VR) { double x; if (!(row >> x)) throw std::runtime_error(path.string() + ": bad row"); v.push_back(x); }
  }
  if (ts.size() < 2) throw std::runtime_error(path.string() + ": need at least two rows");
  d.dt = ts[1] - ts[0];
  return d;
}

void write_curve_csv(const std::filesystem::path& path, const CurvePolyline& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "t,x,y\n";
  for (std::size_t k = 0; k < c.vertices.size(); ++k) {
    out << c.times[k] << ',' << c.vertices[k].real() << ',' << c.vertices[k].imag() << '\n';
  }
}

std::string params_to_json(const SleParams& p) {
  nlohmann::json j;
  j["kappa"] = p.kappa;
  j["weightsL"] = p.weightsL;
  j["weightsR"] = p.weightsR;
  j["pointsL"] = p.pointsL;
  j["pointsR"] = p.pointsR;
  return j.dump(2);
}

SleParams params_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SleParams p;
  p.kappa = j.value("kappa", 2.0);
  p.weightsL = j.value("weightsL", std::vector<double>{});
  p.weightsR = j.value("weightsR", std::vector<double>{});
  p.pointsL = j.value("pointsL", std::vector<double>{});
  p.pointsR = j.value("pointsR", std::vector<double>{});
  p.validate();
  return p;
}

}  // namespace igeom
