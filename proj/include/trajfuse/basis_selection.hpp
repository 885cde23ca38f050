// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "trajfuse/adapter.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/library_io.hpp"

namespace trajfuse {

struct SelectionConfig {
  int window_size = 3;
  double variance_threshold = 10.0;
  int n_basis = 10;

  void validate() const {
    if (window_size < 2) throw ConfigError("window_size must be >= 2");
    if (!(variance_threshold > 0.0)) throw ConfigError("variance_threshold must be positive");
    if (n_basis < 2) throw ConfigError("n_basis must be >= 2");
  }
};

/// Population variance of trait_percentage over the window of `window`
/// checkpoints centered on each index, truncated at the ends. For even
/// windows the extra element is taken after the center.
inline std::vector<double> window_variances(const std::vector<Checkpoint>& cps, int window) {
  const auto n = static_cast<long>(cps.size());
  const long before = (window - 1) / 2;
  const long after = window / 2;
  std::vector<double> out(cps.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - before);
    const long hi = std::min(n - 1, i + after);
    const double count = static_cast<double>(hi - lo + 1);
    double mean = 0.0;
    for (long k = lo; k <= hi; ++k) mean += cps[static_cast<std::size_t>(k)].trait_percentage;
    mean /= count;
    double var = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double dv = cps[static_cast<std::size_t>(k)].trait_percentage - mean;
      var += dv * dv;
    }
    out[static_cast<std::size_t>(i)] = var / count;
  }
  return out;
}

/// Keeps checkpoints whose window variance is at most the threshold.
inline std::vector<Checkpoint> variance_filter(const TrajectoryLibrary& lib,
                                               const SelectionConfig& cfg) {
  cfg.validate();
  if (lib.checkpoints.size() < static_cast<std::size_t>(cfg.window_size))
    throw InsufficientTrajectory("trajectory has " + std::to_string(lib.checkpoints.size()) +
                                 " checkpoints, window needs " +
                                 std::to_string(cfg.window_size));
  const auto var = window_variances(lib.checkpoints, cfg.window_size);
  std::vector<Checkpoint> kept;
  for (std::size_t i = 0; i < var.size(); ++i)
    if (var[i] <= cfg.variance_threshold) kept.push_back(lib.checkpoints[i]);
  return kept;
}

/// Indices into `stable` chosen by uniform value sampling: N evenly spaced
/// targets on [min P, max P]; each picks the nearest unused checkpoint
/// (ties to the lower step).
inline std::vector<std::size_t> uniform_value_indices(const std::vector<Checkpoint>& stable,
                                                      int n_basis) {
  if (stable.size() < 2)
    throw InsufficientStable("need at least 2 stable checkpoints, got " +
                             std::to_string(stable.size()));
  if (n_basis < 2) throw ConfigError("n_basis must be >= 2");
  if (stable.size() < static_cast<std::size_t>(n_basis))
    throw InsufficientStable("only " + std::to_string(stable.size()) +
                             " stable checkpoints for " + std::to_string(n_basis) +
                             " basis adapters");
  double lo = stable[0].trait_percentage, hi = lo;
  for (const auto& c : stable) {
    lo = std::min(lo, c.trait_percentage);
    hi = std::max(hi, c.trait_percentage);
  }
  std::vector<bool> used(stable.size(), false);
  std::vector<std::size_t> picks;
  for (int t = 0; t < n_basis; ++t) {
    const double target =
        t == n_basis - 1 ? hi : lo + (hi - lo) * static_cast<double>(t) / (n_basis - 1);
    std::size_t best = stable.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < stable.size(); ++i) {
      if (used[i]) continue;
      const double dist = std::abs(stable[i].trait_percentage - target);
      if (dist < best_dist ||
          (dist == best_dist && stable[i].step < stable[best].step)) {
        best = i;
        best_dist = dist;
      }
    }
    used[best] = true;
    picks.push_back(best);
  }
  return picks;
}

inline BasisSet uniform_value_sample(const std::vector<Checkpoint>& stable,
                                     const SelectionConfig& cfg, const TraitPair& pair,
                                     const std::string& target_pole) {
  cfg.validate();
  const auto picks = uniform_value_indices(stable, cfg.n_basis);
  std::vector<BasisEntry> entries;
  for (auto i : picks)
    entries.push_back({stable[i].adapter, stable[i].trait_percentage, stable[i].step});
  std::sort(entries.begin(), entries.end(), [](const BasisEntry& a, const BasisEntry& b) {
    return a.intensity != b.intensity ? a.intensity < b.intensity : a.source_step < b.source_step;
  });
  return BasisSet(std::move(entries), pair, target_pole);
}

struct SelectionOutcome {
  BasisSet basis;
  std::vector<double> variances;   // per library checkpoint
  std::vector<bool> kept;          // per library checkpoint
  std::vector<bool> selected;      // per library checkpoint
};

/// Filter then sample. With `use_filter` false every checkpoint counts as
/// stable (the variances are still reported).
inline SelectionOutcome select_basis(const TrajectoryLibrary& lib, const SelectionConfig& cfg,
                                     bool use_filter = true) {
  cfg.validate();
  if (lib.checkpoints.size() < static_cast<std::size_t>(cfg.window_size))
    throw InsufficientTrajectory("trajectory has " + std::to_string(lib.checkpoints.size()) +
                                 " checkpoints, window needs " +
                                 std::to_string(cfg.window_size));
  SelectionOutcome out;
  out.variances = window_variances(lib.checkpoints, cfg.window_size);
  std::vector<Checkpoint> stable;
  std::vector<std::size_t> origin;
  for (std::size_t i = 0; i < lib.checkpoints.size(); ++i) {
    const bool keep = !use_filter || out.variances[i] <= cfg.variance_threshold;
    out.kept.push_back(keep);
    if (keep) {
      stable.push_back(lib.checkpoints[i]);
      origin.push_back(i);
    }
  }
  out.selected.assign(lib.checkpoints.size(), false);
  for (auto i : uniform_value_indices(stable, cfg.n_basis)) out.selected[origin[i]] = true;
  out.basis = uniform_value_sample(stable, cfg, lib.trait_pair, lib.target_pole);
  return out;
}

/// CSV: step,P,variance,kept,selected
inline void write_selection_report(std::ostream& os, const TrajectoryLibrary& lib,
                                   const SelectionOutcome& sel) {
  os << "step,P,variance,kept,selected\n";
  for (std::size_t i = 0; i < lib.checkpoints.size(); ++i)
    os << lib.checkpoints[i].step << ',' << detail::format_double(lib.checkpoints[i].trait_percentage)
       << ',' << detail::format_double(sel.variances[i]) << ',' << (sel.kept[i] ? 1 : 0) << ','
       << (sel.selected[i] ? 1 : 0) << '\n';
}

}  // namespace trajfuse
