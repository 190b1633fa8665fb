#pragma once

#include <cmath>
#include <stdexcept>

namespace mintdro {

/// Inputs to the concentration bounds that size the ambiguity set.
struct CalibrationInput {
  int n = 1;                // dimension of the mean vector
  int m_samples = 1;        // samples behind the estimate
  double r2 = 1.0;          // squared support radius of the standardized samples
  double delta1 = 0.05;
  double delta2 = 0.05;

  void validate() const {
    if (n < 1) throw std::invalid_argument("calibration: n must be >= 1");
    if (m_samples < 1) throw std::invalid_argument("calibration: m_samples must be >= 1");
    if (!(r2 > 0.0)) throw std::invalid_argument("calibration: r2 must be positive");
    if (!(delta1 > 0.0 && delta1 < 1.0) || !(delta2 > 0.0 && delta2 < 1.0))
      throw std::invalid_argument("calibration: failure probabilities must lie in (0,1)");
  }
};

/// beta(delta1) = (R^2 / M) (2 + sqrt(2 ln(1/delta1)))^2. The mean radius
/// gamma1 must exceed this for the ellipsoid to hold the true mean with
/// probability 1 - delta1.
inline double calibrate_gamma1(const CalibrationInput& c) {
  c.validate();
  const double root = 2.0 + std::sqrt(2.0 * std::log(1.0 / c.delta1));
  return c.r2 / c.m_samples * root * root;
}

struct Gamma2Bound {
  double alpha = 0.0;  // alpha(delta2); NaN when R^4 < N
  double value = 0.0;  // 1 / (1 - alpha) when valid, else 0
  bool valid = false;
};

/// Covariance-radius bound: gamma2 > 1 / (1 - alpha(delta2)) with
/// alpha(delta2) = (R^2 / sqrt(M)) (sqrt(1 - N/R^4) + sqrt(ln(1/delta2))),
/// meaningful only when M > R^4 (sqrt(1 - N/R^4) + sqrt(ln(1/delta2)))^2.
inline Gamma2Bound calibrate_gamma2(const CalibrationInput& c) {
  c.validate();
  Gamma2Bound out;
  const double r4 = c.r2 * c.r2;
  if (r4 < c.n) {
    out.alpha = std::nan("");
    return out;
  }
  const double inner = std::sqrt(1.0 - c.n / r4) + std::sqrt(std::log(1.0 / c.delta2));
  out.alpha = c.r2 / std::sqrt(static_cast<double>(c.m_samples)) * inner;
  const bool enough_samples = c.m_samples > r4 * inner * inner;
  if (enough_samples && out.alpha < 1.0) {
    out.valid = true;
    out.value = 1.0 / (1.0 - out.alpha);
  }
  return out;
}

struct FailureProbability {
  double value = 0.0;
  bool capped = false;  // delta1 + delta2 exceeded 1
};

/// Union bound on the probability that the ambiguity set misses the truth.
inline FailureProbability failure_probability(double delta1, double delta2) {
  if (!(delta1 >= 0.0) || !(delta2 >= 0.0))
    throw std::invalid_argument("failure_probability: deltas must be nonnegative");
  const double total = delta1 + delta2;
  return total > 1.0 ? FailureProbability{1.0, true} : FailureProbability{total, false};
}

}  // namespace mintdro
