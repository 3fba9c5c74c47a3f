#include "igeom/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace igeom {

namespace {

void require_strict(const std::vector<double>& xs, bool increasing, const char* field) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const bool ok = increasing ? xs[i] > xs[i - 1] : xs[i] < xs[i - 1];
    if (!ok) {
      std::ostringstream msg;
      msg << field << "[" << i << "] breaks strict "
          << (increasing ? "increase" : "decrease");
      throw ParameterError(msg.str());
    }
  }
}

}  // namespace

void SleParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("kappa: must be positive and finite");
  }
  if (weightsL.size() != pointsL.size()) {
    throw ParameterError("weightsL: length differs from pointsL");
  }
  if (weightsR.size() != pointsR.size()) {
    throw ParameterError("weightsR: length differs from pointsR");
  }
  if (!pointsL.empty() && pointsL.front() > 0.0) {
    throw ParameterError("pointsL[0]: must be <= 0");
  }
  if (!pointsR.empty() && pointsR.front() < 0.0) {
    throw ParameterError("pointsR[0]: must be >= 0");
  }
  require_strict(pointsL, false, "pointsL");
  require_strict(pointsR, true, "pointsR");
  for (double w : weightsL) {
    if (!std::isfinite(w)) throw ParameterError("weightsL: non-finite weight");
  }
  for (double w : weightsR) {
    if (!std::isfinite(w)) throw ParameterError("weightsR: non-finite weight");
  }
}

double DerivedConstants::quarter_turn_residual() const {
  return std::abs(lambdaPrime - (lambda - 0.5 * kPi * chi));
}

double DerivedConstants::full_revolution_residual() const {
  return std::abs(2.0 * kPi * chi - (4.0 - kappa) * lambda);
}

DerivedConstants derive_constants(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("kappa: must be positive and finite");
  }
  const double root = std::sqrt(kappa);
  DerivedConstants c;
  c.kappa = kappa;
  c.lambda = kPi / root;
  c.lambdaPrime = kPi * root / 4.0;
  c.chi = 2.0 / root - root / 2.0;
  c.kappaPrime = 16.0 / kappa;
  return c;
}

double bessel_dimension(double kappa, double rho) {
  if (!(kappa > 0.0)) throw ParameterError("kappa: must be positive");
  return 1.0 + 2.0 * (rho + 2.0) / kappa;
}

ConditionalWeights conditional_law_weights(double theta1, double theta2, double a, double b,
                                           const DerivedConstants& c) {
  if (!(theta1 < theta2)) {
    throw OrderingError("conditional_law_weights: requires theta1 < theta2");
  }
  const double gap = (theta2 - theta1) * c.chi / c.lambda - 2.0;
  ConditionalWeights w;
  w.upperGivenLower = {(a - theta2 * c.chi) / c.lambda - 1.0, gap};
  w.lowerGivenUpper = {gap, (b + theta1 * c.chi) / c.lambda - 1.0};
  return w;
}

bool continuation_threshold_hit(const std::vector<double>& collidingWeights) {
  const double sum = std::accumulate(collidingWeights.begin(), collidingWeights.end(), 0.0);
  return sum <= -2.0;
}

double max_light_cone_angle(const DerivedConstants& c) {
  return (c.lambda - c.lambdaPrime) / c.chi;
}

}  // namespace igeom
