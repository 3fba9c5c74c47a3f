#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace igeom {

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy shared by all modules.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class OrderingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateStartError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment configuration; the message starts with the field path.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Side { Left, Right };

/// Force-point configuration of an SLE_kappa(rho) process.
///
/// pointsL is strictly decreasing with pointsL[0] <= 0 and pointsR strictly
/// increasing with pointsR[0] >= 0. A position of exactly 0 denotes 0^- when it
/// sits in pointsL and 0^+ when it sits in pointsR; the list is the side tag.
struct SleParams {
  double kappa = 2.0;
  std::vector<double> weightsL;
  std::vector<double> weightsR;
  std::vector<double> pointsL;
  std::vector<double> pointsR;

  /// Throws ParameterError naming the offending field.
  void validate() const;

  std::size_t force_point_count() const { return pointsL.size() + pointsR.size(); }

  static SleParams plain(double kappa) { return SleParams{kappa, {}, {}, {}, {}}; }
  static SleParams one_right(double kappa, double x, double rho) {
    return SleParams{kappa, {}, {rho}, {}, {x}};
  }
  static SleParams one_left(double kappa, double x, double rho) {
    return SleParams{kappa, {rho}, {}, {x}, {}};
  }
};

struct DerivedConstants {
  double kappa = 0.0;
  double lambda = 0.0;       // pi / sqrt(kappa)
  double lambdaPrime = 0.0;  // pi sqrt(kappa) / 4
  double chi = 0.0;          // 2/sqrt(kappa) - sqrt(kappa)/2
  double kappaPrime = 0.0;   // 16 / kappa

  /// |lambda' - (lambda - pi chi / 2)|
  double quarter_turn_residual() const;
  /// |2 pi chi - (4 - kappa) lambda|
  double full_revolution_residual() const;
};

DerivedConstants derive_constants(double kappa);

/// delta = 1 + 2 (rho + 2) / kappa
double bessel_dimension(double kappa, double rho);

struct WeightPair {
  double left = 0.0;
  double right = 0.0;
};

/// Force-point weights of two flow lines with angles theta1 < theta2 started
/// from a common point with boundary data -a (left) and b (right).
struct ConditionalWeights {
  WeightPair upperGivenLower;  // law of eta_{theta2} given eta_{theta1}
  WeightPair lowerGivenUpper;  // law of eta_{theta1} given eta_{theta2}
};

ConditionalWeights conditional_law_weights(double theta1, double theta2, double a, double b,
                                           const DerivedConstants& consts);

/// True iff the summed weights of the force points colliding with W on one
/// side reach -2. An empty collision set sums to 0.
bool continuation_threshold_hit(const std::vector<double>& collidingWeights);

/// Maximal light-cone angle (lambda - lambda') / chi; equals pi/2 for every kappa < 4.
double max_light_cone_angle(const DerivedConstants& consts);

}  // namespace igeom
