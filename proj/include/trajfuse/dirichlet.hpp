// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/adapter.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/random.hpp"
#include "trajfuse/special_functions.hpp"

namespace trajfuse {

/// Dirichlet concentrations produced by the policy head.
struct ConcentrationVector {
  std::vector<double> alpha;
  double epsilon_offset = 0.01;

  std::size_t size() const { return alpha.size(); }
  double total() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    return s;
  }
  /// Mean of the distribution, alpha / alpha_0.
  std::vector<double> mean() const {
    const double a0 = total();
    std::vector<double> m(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) m[i] = alpha[i] / a0;
    return m;
  }
};

struct WeightSample {
  std::vector<double> w;
  double log_prob = 0.0;
  double entropy = 0.0;
};

namespace detail {

inline void check_alpha(std::span<const double> alpha) {
  if (alpha.size() < 2) throw DimensionError("Dirichlet needs at least 2 components");
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i]))
      throw DomainError("alpha[" + std::to_string(i) + "] = " +
                        std::to_string(alpha[i]) + " is not a finite positive value");
}

inline void check_interior(std::span<const double> alpha, std::span<const double> w) {
  if (w.size() != alpha.size())
    throw DimensionError("weights and alpha differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0 && w[i] < 1.0))
      throw BoundaryError("w[" + std::to_string(i) + "] = " + std::to_string(w[i]) +
                          " is not in the open interval (0,1)");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw BoundaryError("weights sum to " + std::to_string(sum));
}

/// log of a Gamma(shape, 1) variate.
///
/// Marsaglia-Tsang squeeze for shape >= 1. For shape < 1 the boost
/// Gamma(shape + 1) * U^(1/shape) is applied in log space so that tiny
/// shapes do not underflow before normalization.
inline double log_gamma_variate(double shape, Rng& rng) {
  const bool boost = shape < 1.0;
  const double a = boost ? shape + 1.0 : shape;
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  double log_g = 0.0;
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      log_g = std::log(d) + std::log(v);
      break;
    }
  }
  if (boost) log_g += std::log(rng.uniform_open()) / shape;
  return log_g;
}

}  // namespace detail

/// Gamma(shape, 1) variate.
inline double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
  return std::exp(detail::log_gamma_variate(shape, rng));
}

inline double dirichlet_log_prob(std::span<const double> alpha, std::span<const double> w) {
  detail::check_alpha(alpha);
  detail::check_interior(alpha, w);
  double a0 = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    a0 += alpha[i];
    lp += (alpha[i] - 1.0) * std::log(w[i]) - log_gamma(alpha[i]);
  }
  return lp + log_gamma(a0);
}

/// Differential entropy of Dirichlet(alpha):
///   ln B(alpha) + (alpha_0 - K) psi(alpha_0) - sum_i (alpha_i - 1) psi(alpha_i).
inline double dirichlet_entropy(std::span<const double> alpha) {
  detail::check_alpha(alpha);
  const double k = static_cast<double>(alpha.size());
  double a0 = 0.0, log_b = 0.0, tail = 0.0;
  for (double a : alpha) {
    a0 += a;
    log_b += log_gamma(a);
    tail += (a - 1.0) * digamma(a);
  }
  log_b -= log_gamma(a0);
  return log_b + (a0 - k) * digamma(a0) - tail;
}

/// d/d alpha_i of ln Dir(w; alpha) = psi(alpha_0) - psi(alpha_i) + ln w_i.
inline std::vector<double> score_gradient(std::span<const double> alpha,
                                          std::span<const double> w) {
  detail::check_alpha(alpha);
  detail::check_interior(alpha, w);
  double a0 = 0.0;
  for (double a : alpha) a0 += a;
  const double psi0 = digamma(a0);
  std::vector<double> g(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    g[i] = psi0 - digamma(alpha[i]) + std::log(w[i]);
  return g;
}

/// d/d alpha_i of the entropy = (alpha_0 - K) psi'(alpha_0) - (alpha_i - 1) psi'(alpha_i).
inline std::vector<double> entropy_gradient(std::span<const double> alpha) {
  detail::check_alpha(alpha);
  const double k = static_cast<double>(alpha.size());
  double a0 = 0.0;
  for (double a : alpha) a0 += a;
  const double common = (a0 - k) * trigamma(a0);
  std::vector<double> g(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    g[i] = common - (alpha[i] - 1.0) * trigamma(alpha[i]);
  return g;
}

inline constexpr int kMaxDirichletRetries = 64;

/// Draws w ~ Dirichlet(alpha) by normalizing independent Gamma variates.
/// Draws with a component that rounds to exactly 0 or 1 are redrawn.
inline WeightSample dirichlet_sample(std::span<const double> alpha, Rng& rng) {
  detail::check_alpha(alpha);
  const std::size_t n = alpha.size();
  std::vector<double> log_g(n);
  for (int attempt = 0; attempt < kMaxDirichletRetries; ++attempt) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      log_g[i] = detail::log_gamma_variate(alpha[i], rng);
      mx = std::max(mx, log_g[i]);
    }
    if (!std::isfinite(mx)) continue;
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::exp(log_g[i] - mx);
      sum += w[i];
    }
    bool interior = true;
    for (auto& wi : w) {
      wi /= sum;
      if (!(wi > 0.0 && wi < 1.0)) interior = false;
    }
    if (!interior) continue;
    WeightSample s;
    s.log_prob = dirichlet_log_prob(alpha, w);
    s.entropy = dirichlet_entropy(alpha);
    s.w = std::move(w);
    return s;
  }
  throw NumericalError("Dirichlet sample stayed on the simplex boundary after " +
                       std::to_string(kMaxDirichletRetries) + " draws");
}

inline WeightSample dirichlet_sample(const ConcentrationVector& alpha, Rng& rng) {
  return dirichlet_sample(std::span<const double>(alpha.alpha), rng);
}

}  // namespace trajfuse
