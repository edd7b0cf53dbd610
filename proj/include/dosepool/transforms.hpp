#pragma once

// Bijections from the unconstrained sampler axis to bounded natural scales.
// Each returns the natural value, the log |Jacobian| and the derivatives
// needed for the chain rule.

#include <cmath>

namespace dosepool {

struct TransformValue {
  double value;         ///< natural-scale value
  double dvalue;        ///< d value / d x
  double log_jacobian;  ///< log |d value / d x|
  double dlog_jacobian; ///< d log_jacobian / d x
};

/// x in R -> lower + (upper - lower) * logistic(x).
struct LogisticBounded {
  double lower = 0.0;
  double upper = 1.0;

  TransformValue forward(double x) const {
    const double width = upper - lower;
    // logistic and its log complements, stable for large |x|
    const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    const double log_s = -std::log1p(std::exp(-std::abs(x))) + (x < 0.0 ? x : 0.0);
    const double log_1ms = -std::log1p(std::exp(-std::abs(x))) - (x > 0.0 ? x : 0.0);
    return {lower + width * s, width * s * (1.0 - s), std::log(width) + log_s + log_1ms, 1.0 - 2.0 * s};
  }

  double inverse(double value) const {
    const double p = (value - lower) / (upper - lower);
    return std::log(p) - std::log1p(-p);
  }
};

/// x in R -> exp(x).
struct LogPositive {
  TransformValue forward(double x) const {
    const double v = std::exp(x);
    return {v, v, x, 1.0};
  }
  double inverse(double value) const { return std::log(value); }
};

}  // namespace dosepool
