// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajfuse/adapter.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/library_io.hpp"
#include "trajfuse/policy.hpp"

namespace trajfuse {

struct TargetActual {
  double target = 0.0;
  double actual = 0.0;
};

inline double mae(std::span<const TargetActual> pairs) {
  if (pairs.empty()) throw EmptyInput("no pairs for MAE");
  double s = 0.0;
  for (const auto& p : pairs) s += std::abs(p.target - p.actual);
  return s / static_cast<double>(pairs.size());
}

/// Sample Pearson correlation between targets and actuals.
inline double pearson(std::span<const TargetActual> pairs) {
  if (pairs.size() < 2) throw UndefinedCorrelation("need at least 2 pairs");
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pairs) {
    mx += p.target;
    my += p.actual;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.target - mx, dy = p.actual - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("a sequence is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct EvalReport {
  std::string method_tag;
  std::vector<TargetActual> pairs;
  double mae = 0.0;
  /// Empty when the actual intensities are constant.
  std::optional<double> pearson_r;
};

inline EvalReport make_report(std::string tag, std::vector<TargetActual> pairs) {
  EvalReport r;
  r.method_tag = std::move(tag);
  r.pairs = std::move(pairs);
  r.mae = mae(r.pairs);
  try {
    r.pearson_r = pearson(r.pairs);
  } catch (const UndefinedCorrelation&) {
    r.pearson_r.reset();
  }
  return r;
}

struct OverallMetrics {
  double mae = 0.0;
  /// Mean over the reports that have a defined correlation.
  std::optional<double> pearson_r;
};

/// Per-report metrics averaged with equal weight per report.
inline OverallMetrics overall_metrics(std::span<const EvalReport> reports) {
  if (reports.empty()) throw EmptyInput("no reports to aggregate");
  OverallMetrics out;
  double r_sum = 0.0;
  int r_count = 0;
  for (const auto& r : reports) {
    out.mae += r.mae;
    if (r.pearson_r) {
      r_sum += *r.pearson_r;
      ++r_count;
    }
  }
  out.mae /= static_cast<double>(reports.size());
  if (r_count > 0) out.pearson_r = r_sum / r_count;
  return out;
}

/// Maps a target intensity to the adapter to apply.
using Controller = std::function<Adapter(double p_target)>;

/// Grid {0, 10, ..., 100} restricted to [lo, hi].
inline std::vector<double> default_eval_targets(double lo, double hi) {
  std::vector<double> out;
  for (int t = 0; t <= 100; t += 10)
    if (t >= lo && t <= hi) out.push_back(t);
  return out;
}

/// Evaluates each target once; `noise` null means noise-free measurement.
inline EvalReport eval_grid(const Controller& controller, const Environment& env,
                            std::span<const double> targets, std::string tag,
                            Rng* noise = nullptr) {
  if (targets.empty()) throw EmptyInput("no evaluation targets");
  std::vector<TargetActual> pairs;
  for (double t : targets) pairs.push_back({t, env.evaluate(controller(t), noise)});
  return make_report(std::move(tag), std::move(pairs));
}

// --- controllers -----------------------------------------------------------

/// One-hot on the basis entry nearest in intensity (ties: lower step).
inline std::vector<double> baseline_nearest(const BasisSet& basis, double p_target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < basis.size(); ++i) {
    const double di = std::abs(basis[i].intensity - p_target);
    const double db = std::abs(basis[best].intensity - p_target);
    if (di < db || (di == db && basis[i].source_step < basis[best].source_step)) best = i;
  }
  std::vector<double> w(basis.size(), 0.0);
  w[best] = 1.0;
  return w;
}

namespace detail {

/// Among entries with intensity equal to entries[i], the lowest step.
inline std::size_t lowest_step_with_intensity(const BasisSet& basis, double intensity) {
  std::size_t best = basis.size();
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i].intensity == intensity &&
        (best == basis.size() || basis[i].source_step < basis[best].source_step))
      best = i;
  return best;
}

}  // namespace detail

/// Linear interpolation between the bracketing basis entries; one-hot on
/// the nearest endpoint outside the range.
inline std::vector<double> baseline_interp(const BasisSet& basis, double p_target) {
  std::vector<double> w(basis.size(), 0.0);
  if (p_target <= basis.min_intensity()) {
    w[detail::lowest_step_with_intensity(basis, basis.min_intensity())] = 1.0;
    return w;
  }
  if (p_target >= basis.max_intensity()) {
    w[detail::lowest_step_with_intensity(basis, basis.max_intensity())] = 1.0;
    return w;
  }
  // First entry at or above the target; its predecessor is strictly below.
  std::size_t hi = 1;
  while (basis[hi].intensity < p_target) ++hi;
  const std::size_t lo = hi - 1;
  const double ilo = basis[lo].intensity, ihi = basis[hi].intensity;
  if (ihi == p_target) {
    w[detail::lowest_step_with_intensity(basis, ihi)] = 1.0;
    return w;
  }
  w[lo] = (ihi - p_target) / (ihi - ilo);
  w[hi] = 1.0 - w[lo];
  return w;
}

/// Coefficient for scaling the final adapter: (P - P0)/(P1 - P0), clamped.
inline double scaled_vector_coefficient(double p0, double p1, double p_target,
                                        double max_coeff = 1.5) {
  if (p1 == p0) throw DegenerateVector("base and final intensities coincide");
  return std::clamp((p_target - p0) / (p1 - p0), 0.0, max_coeff);
}

inline Adapter baseline_scaled_vector(const Adapter& final_adapter, double p0, double p1,
                                      double p_target, double max_coeff = 1.5) {
  return scale_adapter(final_adapter, scaled_vector_coefficient(p0, p1, p_target, max_coeff));
}

/// Wraps a weight rule; fuse_adapters rejects any non-simplex output.
inline Controller weights_controller(
    const BasisSet& basis, std::function<std::vector<double>(double)> rule) {
  return [&basis, rule = std::move(rule)](double p) { return fuse_adapters(basis, rule(p)); };
}

inline Controller nearest_controller(const BasisSet& basis) {
  return weights_controller(basis, [&basis](double p) { return baseline_nearest(basis, p); });
}

inline Controller interp_controller(const BasisSet& basis) {
  return weights_controller(basis, [&basis](double p) { return baseline_interp(basis, p); });
}

/// Deterministic policy action: the Dirichlet mean alpha / alpha_0.
inline Controller policy_mean_controller(const PolicyNetwork& policy, const BasisSet& basis) {
  return weights_controller(basis, [&policy](double p) {
    return policy.forward(normalize_target(p)).mean();
  });
}

inline Controller scaled_controller(Adapter final_adapter, double p0, double p1,
                                    double max_coeff = 1.5) {
  if (p1 == p0) throw DegenerateVector("base and final intensities coincide");
  return [a = std::move(final_adapter), p0, p1, max_coeff](double p) {
    return baseline_scaled_vector(a, p0, p1, p, max_coeff);
  };
}

// --- report output -----------------------------------------------------------

inline void write_report_csv(std::ostream& os, const EvalReport& r) {
  os << "target,actual,abs_err\n";
  for (const auto& p : r.pairs)
    os << detail::format_double(p.target) << ',' << detail::format_double(p.actual) << ','
       << detail::format_double(std::abs(p.target - p.actual)) << '\n';
}

inline std::string report_summary_json(const EvalReport& r, const std::string& config_hash) {
  std::string out = "{\n  \"method\": " + detail::quote(r.method_tag) +
                    ",\n  \"mae\": " + detail::format_double(r.mae) + ",\n  \"pearson_r\": " +
                    (r.pearson_r ? detail::format_double(*r.pearson_r) : std::string("null")) +
                    ",\n  \"n_targets\": " + std::to_string(r.pairs.size()) +
                    ",\n  \"config_hash\": " + detail::quote(config_hash) + "\n}\n";
  return out;
}

}  // namespace trajfuse
