#pragma once

#include <cmath>

namespace medlfrm {

// Digamma function for x > 0. Shifts the argument up to >= 6 with the
// recurrence psi(x) = psi(x + 1) - 1/x, then applies the asymptotic series.
double digamma(double x);

// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
double log_beta(double a, double b);

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// x log x with 0 log 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace medlfrm
