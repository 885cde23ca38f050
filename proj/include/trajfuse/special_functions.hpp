// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "trajfuse/error.hpp"

namespace trajfuse {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Digamma psi(x) for x > 0.
///
/// Shifts the argument up with psi(x) = psi(x + 1) - 1/x until x >= 6, then
/// applies the asymptotic expansion
///   psi(x) ~ ln x - 1/(2x) - sum_k B_2k / (2k x^2k).
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("digamma requires finite x > 0, got " + std::to_string(x));
  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k/(2k) for k = 1..7.
  const double series =
      inv2 * (1.0 / 12 -
      inv2 * (1.0 / 120 -
      inv2 * (1.0 / 252 -
      inv2 * (1.0 / 240 -
      inv2 * (1.0 / 132 -
      inv2 * (691.0 / 32760 -
      inv2 * (1.0 / 12)))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

/// Trigamma psi'(x) for x > 0, same shift-plus-series scheme:
///   psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1).
inline double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("trigamma requires finite x > 0, got " + std::to_string(x));
  double shift = 0.0;
  while (x < 6.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * inv2 * (1.0 / 6 -
      inv2 * (1.0 / 30 -
      inv2 * (1.0 / 42 -
      inv2 * (1.0 / 30 -
      inv2 * (5.0 / 66 -
      inv2 * (691.0 / 2730 -
      inv2 * (7.0 / 6)))))));
  return shift + inv + 0.5 * inv2 + series;
}

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("log_gamma requires finite x > 0, got " + std::to_string(x));
  return std::lgamma(x);
}

}  // namespace trajfuse
