#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace dtco {

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// h(x) = 2 vt ln(1 + exp(x / (2 vt))): smooth max(x, 0).
inline double smooth_relu(double x, double vt) { return 2.0 * vt * softplus(x / (2.0 * vt)); }
inline double smooth_relu_deriv(double x, double vt) { return sigmoid(x / (2.0 * vt)); }

/// 17 significant digits; lossless for doubles.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dtco
