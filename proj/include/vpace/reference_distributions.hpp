#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vpace/distribution.hpp"

namespace vpace {

/// CDF s^k on [0, 1]: the maximum of k independent uniforms.
inline AnalyticDistribution uniform_power(int k) {
  if (k < 1) throw std::invalid_argument("uniform_power needs k >= 1");
  AnalyticDistribution d;
  d.name = "uniform^" + std::to_string(k);
  d.cdf = [k](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return std::pow(s, k);
  };
  d.antiderivative = [k](double s) {
    if (s <= 0.0) return 0.0;
    const double tail = 1.0 / (k + 1);
    if (s >= 1.0) return tail + (s - 1.0);
    return std::pow(s, k + 1) * tail;
  };
  d.competitor = [k](int n) { return uniform_power(k * (n - 1)); };
  return d;
}

/// Uniform on [0, 1].
inline AnalyticDistribution uniform_unit() { return uniform_power(1); }

/// CDF 2 arcsin(s) / pi on [0, 1]: the e1 coordinate of a point drawn
/// uniformly by angle on the quarter unit circle.
inline AnalyticDistribution arcsine_quarter_circle() {
  AnalyticDistribution d;
  d.name = "arcsine";
  d.cdf = [](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return 2.0 * std::asin(s) / std::numbers::pi;
  };
  d.antiderivative = [](double s) {
    if (s <= 0.0) return 0.0;
    const double c = 2.0 / std::numbers::pi;
    if (s >= 1.0) return c * (std::numbers::pi / 2.0 - 1.0) + (s - 1.0);
    return c * (s * std::asin(s) + std::sqrt(1.0 - s * s) - 1.0);
  };
  return d;
}

}  // namespace vpace
