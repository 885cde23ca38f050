// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/adapter.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {

struct AnalyticEnvConfig {
  std::vector<double> basis_intensities{5, 20, 40, 60, 80, 95};
  double warp_gamma = 1.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (basis_intensities.size() < 2)
      throw ConfigError("basis_intensities needs at least 2 values");
    for (std::size_t i = 0; i < basis_intensities.size(); ++i) {
      if (!(basis_intensities[i] >= 0.0 && basis_intensities[i] <= 100.0))
        throw ConfigError("basis_intensities must lie in [0,100]");
      if (i && basis_intensities[i] < basis_intensities[i - 1])
        throw ConfigError("basis_intensities must be sorted ascending");
    }
    if (!(warp_gamma > 0.0)) throw ConfigError("warp_gamma must be positive");
    if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be non-negative");
  }
};

/// Symmetric sigmoid-like warp of a mixed intensity m in [0,100]:
/// 100 x^g / (x^g + (1-x)^g) with x = m/100. Monotone, fixes 0, 50 and 100.
inline double intensity_warp(double m, double gamma) {
  const double x = std::clamp(m / 100.0, 0.0, 1.0);
  if (x == 0.0 || x == 1.0) return 100.0 * x;
  const double a = std::pow(x, gamma);
  const double b = std::pow(1.0 - x, gamma);
  return 100.0 * a / (a + b);
}

/// Warped, optionally noisy intensity of the mixture sum_i w_i c_i.
inline double analytic_evaluate(const AnalyticEnvConfig& cfg, std::span<const double> weights,
                                Rng* noise = nullptr) {
  if (weights.size() != cfg.basis_intensities.size())
    throw DimensionError("weights do not match basis_intensities");
  check_simplex(weights);
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * cfg.basis_intensities[i];
  double p = intensity_warp(m, cfg.warp_gamma);
  if (noise && cfg.noise_sd > 0.0) p += cfg.noise_sd * noise->normal();
  return std::clamp(p, 0.0, 100.0);
}

/// Adapters for this environment are one-element vectors holding the latent
/// intensity m; fusion therefore mixes m linearly and the warp is applied on
/// evaluation.
class AnalyticEnvironment final : public Environment {
 public:
  explicit AnalyticEnvironment(AnalyticEnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  double evaluate(const Adapter& fused, Rng* noise) const override {
    if (fused.size() != 1)
      throw DimensionError("analytic environment expects a 1-element adapter");
    double p = intensity_warp(fused.data()[0], cfg_.warp_gamma);
    if (noise && cfg_.noise_sd > 0.0) p += cfg_.noise_sd * noise->normal();
    return std::clamp(p, 0.0, 100.0);
  }

  std::string descriptor() const override {
    return "analytic(gamma=" + std::to_string(cfg_.warp_gamma) +
           ", noise_sd=" + std::to_string(cfg_.noise_sd) + ")";
  }

  const AnalyticEnvConfig& config() const { return cfg_; }

 private:
  AnalyticEnvConfig cfg_;
};

inline Adapter latent_adapter(double m) { return Adapter::vector({m}, "latent_intensity"); }

/// Basis whose i-th adapter carries latent intensity c_i; the recorded
/// intensity is the noise-free measurement of that adapter.
inline BasisSet analytic_basis(const AnalyticEnvConfig& cfg) {
  cfg.validate();
  std::vector<BasisEntry> entries;
  for (std::size_t i = 0; i < cfg.basis_intensities.size(); ++i) {
    const double c = cfg.basis_intensities[i];
    entries.push_back({latent_adapter(c), intensity_warp(c, cfg.warp_gamma),
                       static_cast<std::int64_t>(i)});
  }
  return BasisSet(std::move(entries), {"E", "I"}, "E");
}

struct AnalyticTrajectoryConfig {
  int steps = 120;
  /// Time constant of the saturating rise, in steps.
  double rise_steps = 25.0;
  /// Early-training latent jitter (sd, intensity points), decaying with the rise.
  double jitter_sd = 4.0;
};

/// Synthetic fine-tuning run: the latent intensity rises from the lowest to
/// the highest basis intensity with diminishing returns and early jitter;
/// each checkpoint records the (noisy) measured percentage.
inline TrajectoryLibrary analytic_trajectory(const AnalyticEnvConfig& cfg,
                                             const AnalyticTrajectoryConfig& tcfg, Rng& rng) {
  cfg.validate();
  if (tcfg.steps < 1 || !(tcfg.rise_steps > 0.0) || !(tcfg.jitter_sd >= 0.0))
    throw ConfigError("invalid analytic trajectory config");
  const AnalyticEnvironment env(cfg);
  const double lo = cfg.basis_intensities.front();
  const double hi = cfg.basis_intensities.back();
  TrajectoryLibrary lib;
  lib.trait_pair = {"E", "I"};
  lib.target_pole = "E";
  for (int t = 0; t <= tcfg.steps; ++t) {
    const double decay = std::exp(-t / tcfg.rise_steps);
    double m = lo + (hi - lo) * (1.0 - decay) + tcfg.jitter_sd * decay * rng.normal();
    m = std::clamp(m, 0.0, 100.0);
    const Adapter a = latent_adapter(m);
    lib.checkpoints.push_back({t, a, env.evaluate(a, &rng)});
  }
  return lib;
}

struct OracleResult {
  std::vector<double> weights;
  double residual = 0.0;
  double achieved = 0.0;
};

inline constexpr double kOracleMaxPoints = 2.0e6;

/// Number of points of the simplex grid with resolution 1/k in n dimensions.
inline double simplex_grid_size(int n, int k) {
  double c = 1.0;
  for (int i = 1; i < n; ++i) c = c * (k + i) / i;
  return c;
}

/// Exhaustive search over the simplex grid {k/K} for the noise-free weights
/// whose output is closest to `target`.
inline OracleResult oracle_best_weights(const AnalyticEnvConfig& cfg, double target,
                                        double grid_step,
                                        double max_points = kOracleMaxPoints) {
  cfg.validate();
  const int n = static_cast<int>(cfg.basis_intensities.size());
  const double k_real = 1.0 / grid_step;
  const int k = static_cast<int>(std::lround(k_real));
  if (!(grid_step > 0.0) || k < 1 || std::abs(k_real - k) > 1e-6 * k_real)
    throw DomainError("grid_step must divide 1, got " + std::to_string(grid_step));
  if (n > 4 && simplex_grid_size(n, k) > max_points)
    throw OracleUnsupported("simplex grid for N=" + std::to_string(n) + " at step " +
                            std::to_string(grid_step) + " has " +
                            std::to_string(simplex_grid_size(n, k)) + " points");

  OracleResult best;
  best.residual = std::numeric_limits<double>::infinity();
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::vector<double> w(static_cast<std::size_t>(n));
  std::function<void(int, int)> visit = [&](int idx, int remaining) {
    if (idx == n - 1) {
      counts[static_cast<std::size_t>(idx)] = remaining;
      for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / k;
      double m = 0.0;
      for (int i = 0; i < n; ++i) m += w[static_cast<std::size_t>(i)] * cfg.basis_intensities[static_cast<std::size_t>(i)];
      const double p = intensity_warp(m, cfg.warp_gamma);
      const double r = std::abs(p - target);
      if (r < best.residual) {
        best.residual = r;
        best.achieved = p;
        best.weights = w;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(idx)] = c;
      visit(idx + 1, remaining - c);
    }
  };
  visit(0, k);
  return best;
}

}  // namespace trajfuse
