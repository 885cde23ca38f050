// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "trajfuse/ablation.hpp"
#include "trajfuse/analytic_env.hpp"
#include "trajfuse/basis_selection.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/toy_sft.hpp"
#include "trajfuse/trainer.hpp"

// JSON <-> config structs. Readers are strict: unknown keys and wrongly
// typed values raise ConfigError so typos do not silently fall back to
// defaults.

namespace trajfuse::config {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown field '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + section + "." + key + "' has the wrong type");
  }
}

inline AnalyticEnvConfig analytic_from_json(const json& j) {
  check_keys(j, "env", {"basis_intensities", "warp_gamma", "noise_sd", "seed"});
  AnalyticEnvConfig c;
  read(j, "basis_intensities", c.basis_intensities, "env");
  read(j, "warp_gamma", c.warp_gamma, "env");
  read(j, "noise_sd", c.noise_sd, "env");
  read(j, "seed", c.seed, "env");
  c.validate();
  return c;
}

inline json to_json(const AnalyticEnvConfig& c) {
  return {{"basis_intensities", c.basis_intensities},
          {"warp_gamma", c.warp_gamma},
          {"noise_sd", c.noise_sd},
          {"seed", c.seed}};
}

inline ToySFTConfig toy_from_json(const json& j) {
  check_keys(j, "env", {"n_items", "feature_dim", "lora_rank", "sft_lr", "sft_steps",
                        "batch_size", "n_train", "label_noise", "seed"});
  ToySFTConfig c;
  read(j, "n_items", c.n_items, "env");
  read(j, "feature_dim", c.feature_dim, "env");
  read(j, "lora_rank", c.lora_rank, "env");
  read(j, "sft_lr", c.sft_lr, "env");
  read(j, "sft_steps", c.sft_steps, "env");
  read(j, "batch_size", c.batch_size, "env");
  read(j, "n_train", c.n_train, "env");
  read(j, "label_noise", c.label_noise, "env");
  read(j, "seed", c.seed, "env");
  c.validate();
  return c;
}

inline json to_json(const ToySFTConfig& c) {
  return {{"n_items", c.n_items},         {"feature_dim", c.feature_dim},
          {"lora_rank", c.lora_rank},     {"sft_lr", c.sft_lr},
          {"sft_steps", c.sft_steps},     {"batch_size", c.batch_size},
          {"n_train", c.n_train},         {"label_noise", c.label_noise},
          {"seed", c.seed}};
}

inline AnalyticTrajectoryConfig trajectory_from_json(const json& j) {
  check_keys(j, "trajectory", {"steps", "rise_steps", "jitter_sd"});
  AnalyticTrajectoryConfig c;
  read(j, "steps", c.steps, "trajectory");
  read(j, "rise_steps", c.rise_steps, "trajectory");
  read(j, "jitter_sd", c.jitter_sd, "trajectory");
  if (c.steps < 1 || !(c.rise_steps > 0.0) || !(c.jitter_sd >= 0.0))
    throw ConfigError("invalid trajectory section");
  return c;
}

inline json to_json(const AnalyticTrajectoryConfig& c) {
  return {{"steps", c.steps}, {"rise_steps", c.rise_steps}, {"jitter_sd", c.jitter_sd}};
}

inline SelectionConfig selection_from_json(const json& j) {
  check_keys(j, "selection", {"window_size", "variance_threshold", "n_basis"});
  SelectionConfig c;
  read(j, "window_size", c.window_size, "selection");
  read(j, "variance_threshold", c.variance_threshold, "selection");
  read(j, "n_basis", c.n_basis, "selection");
  c.validate();
  return c;
}

inline json to_json(const SelectionConfig& c) {
  return {{"window_size", c.window_size},
          {"variance_threshold", c.variance_threshold},
          {"n_basis", c.n_basis}};
}

inline TrainConfig train_from_json(const json& j) {
  check_keys(j, "train", {"epochs", "targets_per_epoch", "lr", "accumulation_steps",
                          "grad_clip_norm", "baseline_decay", "entropy_coeff_init",
                          "entropy_decay", "entropy_min", "weight_decay", "checkpoint_every"});
  TrainConfig c;
  read(j, "epochs", c.epochs, "train");
  read(j, "targets_per_epoch", c.targets_per_epoch, "train");
  read(j, "lr", c.lr, "train");
  read(j, "accumulation_steps", c.accumulation_steps, "train");
  read(j, "grad_clip_norm", c.grad_clip_norm, "train");
  read(j, "baseline_decay", c.baseline_decay, "train");
  read(j, "entropy_coeff_init", c.entropy_coeff_init, "train");
  read(j, "entropy_decay", c.entropy_decay, "train");
  read(j, "entropy_min", c.entropy_min, "train");
  read(j, "weight_decay", c.weight_decay, "train");
  read(j, "checkpoint_every", c.checkpoint_every, "train");
  c.validate();
  return c;
}

inline json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"targets_per_epoch", c.targets_per_epoch},
          {"lr", c.lr},
          {"accumulation_steps", c.accumulation_steps},
          {"grad_clip_norm", c.grad_clip_norm},
          {"baseline_decay", c.baseline_decay},
          {"entropy_coeff_init", c.entropy_coeff_init},
          {"entropy_decay", c.entropy_decay},
          {"entropy_min", c.entropy_min},
          {"weight_decay", c.weight_decay},
          {"checkpoint_every", c.checkpoint_every}};
}

inline RewardConfig reward_from_json(const json& j) {
  check_keys(j, "reward", {"kind", "lambda", "bonus", "delta"});
  RewardConfig c;
  std::string kind = "exponential";
  read(j, "kind", kind, "reward");
  if (kind == "exponential")
    c.kind = RewardKind::kExponential;
  else if (kind == "linear")
    c.kind = RewardKind::kLinear;
  else
    throw ConfigError("reward.kind must be 'exponential' or 'linear'");
  read(j, "lambda", c.lambda, "reward");
  read(j, "bonus", c.bonus, "reward");
  read(j, "delta", c.delta, "reward");
  c.validate();
  return c;
}

inline json to_json(const RewardConfig& c) {
  return {{"kind", c.kind == RewardKind::kLinear ? "linear" : "exponential"},
          {"lambda", c.lambda},
          {"bonus", c.bonus},
          {"delta", c.delta}};
}

struct EvalConfig {
  double scaled_max_coeff = 1.5;
  bool noise = false;
};

inline EvalConfig eval_from_json(const json& j) {
  check_keys(j, "eval", {"scaled_max_coeff", "noise"});
  EvalConfig c;
  read(j, "scaled_max_coeff", c.scaled_max_coeff, "eval");
  read(j, "noise", c.noise, "eval");
  if (!(c.scaled_max_coeff >= 1.0)) throw ConfigError("eval.scaled_max_coeff must be >= 1");
  return c;
}

inline json to_json(const EvalConfig& c) {
  return {{"scaled_max_coeff", c.scaled_max_coeff}, {"noise", c.noise}};
}

struct OracleConfig {
  double grid_step = 0.01;
};

inline OracleConfig oracle_from_json(const json& j) {
  check_keys(j, "oracle", {"grid_step"});
  OracleConfig c;
  read(j, "grid_step", c.grid_step, "oracle");
  if (!(c.grid_step > 0.0 && c.grid_step <= 1.0))
    throw ConfigError("oracle.grid_step must be in (0,1]");
  return c;
}

inline json to_json(const OracleConfig& c) { return {{"grid_step", c.grid_step}}; }

/// Top-level config file: every section is optional.
inline void check_top_level(const json& j) {
  check_keys(j, "<root>",
             {"env", "trajectory", "selection", "train", "reward", "eval", "oracle"});
}

}  // namespace trajfuse::config
