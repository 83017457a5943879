#pragma once

#include <cmath>
#include <limits>

namespace ehflow {

// Library-wide defaults.
inline constexpr double kDefaultEpsilon = 1e-6;  // solver convergence tolerance (rate units)
inline constexpr double kFeasTol = 1e-7;         // feasibility assertion tolerance
inline constexpr long kMaxLayerIterations = 100000;   // inner-solver Newton budget
inline constexpr int kMaxOuterIterations = 10000;     // multi-layer outer-loop cap

// A nonnegative power budget that may be unbounded (pass-through nodes created by
// the DAG -> layered transform carry no budget of their own).
struct Power {
  double watts = 0.0;
  bool unbounded = false;

  static Power finite(double w) { return Power{w, false}; }
  static Power infinite() { return Power{std::numeric_limits<double>::infinity(), true}; }
  bool is_finite() const { return !unbounded; }
};

// The point-to-point rate function and its inverse. All logarithms are base 2.
struct RateFunction {
  // rate achieved with transmit power p
  static double evaluate(double p) { return std::log2(1.0 + p); }
  // power required to achieve rate r
  static double invert(double r) { return std::exp2(r) - 1.0; }
};

}  // namespace ehflow
