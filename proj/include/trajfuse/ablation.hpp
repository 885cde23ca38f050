// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "trajfuse/basis_selection.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/metrics.hpp"
#include "trajfuse/policy.hpp"
#include "trajfuse/trainer.hpp"

namespace trajfuse {

struct AblationConfig {
  SelectionConfig selection;
  TrainConfig train;
  RewardConfig reward;
};

struct AblationRow {
  std::string variant;
  EvalReport report;
};

inline PolicyNetwork initial_policy(std::size_t n_out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "policy-init"));
  return PolicyNetwork::initialized(static_cast<int>(n_out), rng);
}

/// Trains a fresh policy (same seed for every variant) and evaluates its
/// Dirichlet-mean action on `targets`.
inline EvalReport train_and_evaluate(const Environment& env, const BasisSet& basis,
                                     const TrainConfig& tcfg, const RewardConfig& rcfg,
                                     std::span<const double> targets, const std::string& tag) {
  auto trained = train_policy(env, basis, initial_policy(basis.size(), tcfg.seed), tcfg, rcfg);
  return eval_grid(policy_mean_controller(trained.policy, basis), env, targets, tag);
}

/// Full method against its three ablations:
///   w/o Dynamic Fusion   - interpolation between bracketing basis adapters
///   w/o Stable Basis     - basis sampled from the unfiltered trajectory
///   w/o Aggressive Reward - linear reward 1 - d
/// All variants are scored on the same target grid, taken from the full
/// method's controllable range.
inline std::vector<AblationRow> run_ablations(const Environment& env, const TrajectoryLibrary& lib,
                                              const AblationConfig& cfg) {
  const BasisSet stable = select_basis(lib, cfg.selection, true).basis;
  const BasisSet unfiltered = select_basis(lib, cfg.selection, false).basis;
  const auto [lo, hi] = env.controllable_range(stable);
  const auto targets = default_eval_targets(lo, hi);

  RewardConfig linear = cfg.reward;
  linear.kind = RewardKind::kLinear;

  std::vector<AblationRow> rows;
  rows.push_back({"full", train_and_evaluate(env, stable, cfg.train, cfg.reward, targets, "full")});
  rows.push_back({"w/o Dynamic Fusion",
                  eval_grid(interp_controller(stable), env, targets, "w/o Dynamic Fusion")});
  rows.push_back({"w/o Stable Basis", train_and_evaluate(env, unfiltered, cfg.train, cfg.reward,
                                                         targets, "w/o Stable Basis")});
  rows.push_back({"w/o Aggressive Reward", train_and_evaluate(env, stable, cfg.train, linear,
                                                              targets, "w/o Aggressive Reward")});
  return rows;
}

inline void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
  os << "variant,mae,pearson_r\n";
  for (const auto& r : rows)
    os << r.variant << ',' << detail::format_double(r.report.mae) << ','
       << (r.report.pearson_r ? detail::format_double(*r.report.pearson_r) : std::string(""))
       << '\n';
}

}  // namespace trajfuse
