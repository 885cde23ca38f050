// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajfuse/adapter.hpp"
#include "trajfuse/dirichlet.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/library_io.hpp"
#include "trajfuse/optimizer.hpp"
#include "trajfuse/policy.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {

enum class RewardKind {
  kExponential,  // exp(-lambda d) + bonus inside delta
  kLinear,       // 1 - d
};

struct RewardConfig {
  RewardKind kind = RewardKind::kExponential;
  double lambda = 20.0;
  double bonus = 0.5;
  /// Bonus tolerance on the normalized gap (0.01 = one percentage point).
  double delta = 0.01;

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("reward lambda must be positive");
    if (!(delta > 0.0)) throw ConfigError("reward delta must be positive");
  }
};

/// Reward for hitting `p_target`; the gap is normalized by 100 before shaping.
inline double compute_reward(double p_target, double p_actual, const RewardConfig& cfg) {
  const double d = std::abs(p_target - p_actual) / 100.0;
  if (cfg.kind == RewardKind::kLinear) return 1.0 - d;
  return std::exp(-cfg.lambda * d) + (d < cfg.delta ? cfg.bonus : 0.0);
}

struct BaselineState {
  double value = 0.0;
  bool initialized = false;
};

/// Exponential moving average; the first observation seeds the average.
inline BaselineState update_baseline(BaselineState s, double reward, double decay) {
  if (!std::isfinite(reward)) throw NumericalError("non-finite reward");
  if (!s.initialized) return {reward, true};
  return {decay * s.value + (1.0 - decay) * reward, true};
}

struct TrainConfig {
  int epochs = 20;
  int targets_per_epoch = 32;
  double lr = 1e-3;
  int accumulation_steps = 4;
  double grad_clip_norm = 0.5;
  double baseline_decay = 0.95;
  double entropy_coeff_init = 0.1;
  double entropy_decay = 0.9;
  double entropy_min = 0.01;
  double weight_decay = 0.01;
  /// Policy checkpoint cadence in epochs for callers that save them; 0 disables.
  int checkpoint_every = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1 || targets_per_epoch < 1 || accumulation_steps < 1 || checkpoint_every < 0)
      throw ConfigError("epochs, targets_per_epoch and accumulation_steps must be positive");
    if (!(lr > 0.0) || !(grad_clip_norm > 0.0) || !(baseline_decay > 0.0) ||
        !(baseline_decay < 1.0) || !(entropy_decay > 0.0) || !(entropy_min > 0.0) ||
        !(entropy_coeff_init > 0.0) || !(weight_decay >= 0.0))
      throw ConfigError("training coefficients out of range");
    if (entropy_min > entropy_coeff_init)
      throw ConfigError("entropy_min must not exceed entropy_coeff_init");
  }
};

inline double entropy_coefficient(int epoch, const TrainConfig& cfg) {
  return std::max(cfg.entropy_min,
                  cfg.entropy_coeff_init * std::pow(cfg.entropy_decay, static_cast<double>(epoch)));
}

/// `count` evenly spaced targets on [lo, hi], each jittered uniformly by up
/// to half the spacing and clamped back into the range. Pass a null rng
/// for the unperturbed grid.
inline std::vector<double> sample_targets(Rng* rng, double lo, double hi, int count) {
  if (!(hi > lo)) throw DegenerateRange("controllable range [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "] is empty");
  if (count < 1) throw ConfigError("target count must be positive");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = rng ? rng->uniform(lo, hi) : 0.5 * (lo + hi);
    return out;
  }
  const double spacing = (hi - lo) / (count - 1);
  for (int k = 0; k < count; ++k) {
    double t = k == count - 1 ? hi : lo + spacing * k;
    if (rng) t += rng->uniform(-0.5 * spacing, 0.5 * spacing);
    out[static_cast<std::size_t>(k)] = std::clamp(t, lo, hi);
  }
  return out;
}

/// One sampled action with its (frozen) advantage.
struct Rollout {
  double p_hat = 0.0;
  std::vector<double> w;
  double advantage = 0.0;
};

/// Mean over the batch of -A log pi(w | alpha(p_hat)) - beta H(alpha(p_hat)).
inline double reinforce_loss(const PolicyNetwork& net, std::span<const Rollout> batch,
                             double beta) {
  if (batch.empty()) throw EmptyInput("empty rollout batch");
  double total = 0.0;
  for (const auto& r : batch) {
    const auto alpha = net.forward(r.p_hat);
    total += -r.advantage * dirichlet_log_prob(alpha.alpha, r.w) -
             beta * dirichlet_entropy(alpha.alpha);
  }
  return total / static_cast<double>(batch.size());
}

/// Adds `scale` times the gradient of -A log pi(w) - beta H for one rollout
/// whose forward pass is `trace`.
inline void accumulate_rollout_gradient(const PolicyNetwork& net, const PolicyTrace& trace,
                                        std::span<const double> w, double advantage,
                                        double beta, double scale, Eigen::VectorXd& grad) {
  const auto score = score_gradient(trace.alpha.alpha, w);
  const auto dent = entropy_gradient(trace.alpha.alpha);
  std::vector<double> dalpha(score.size());
  for (std::size_t i = 0; i < score.size(); ++i)
    dalpha[i] = scale * (-advantage * score[i] - beta * dent[i]);
  grad += net.backward(trace, dalpha);
}

/// Analytic gradient of reinforce_loss with respect to the flat policy
/// parameters. Per-rollout gradients are summed in batch order.
inline Eigen::VectorXd reinforce_loss_gradient(const PolicyNetwork& net,
                                               std::span<const Rollout> batch, double beta) {
  if (batch.empty()) throw EmptyInput("empty rollout batch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params().size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& r : batch)
    accumulate_rollout_gradient(net, net.trace(r.p_hat), r.w, r.advantage, beta, scale, grad);
  return grad;
}

struct TrainLogRow {
  int epoch = 0;
  long step = 0;
  double p_target = 0.0;
  double p_actual = 0.0;
  double reward = 0.0;
  double baseline = 0.0;
  double beta = 0.0;
  double grad_norm = 0.0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double entropy = 0.0;
};

inline void write_training_log(std::ostream& os, const std::vector<TrainLogRow>& rows) {
  using detail::format_double;
  os << "epoch,step,P_target,P_actual,reward,baseline,beta,grad_norm,alpha_min,alpha_max\n";
  for (const auto& r : rows)
    os << r.epoch << ',' << r.step << ',' << format_double(r.p_target) << ','
       << format_double(r.p_actual) << ',' << format_double(r.reward) << ','
       << format_double(r.baseline) << ',' << format_double(r.beta) << ','
       << format_double(r.grad_norm) << ',' << format_double(r.alpha_min) << ','
       << format_double(r.alpha_max) << '\n';
}

struct TrainHooks {
  /// Called after every epoch with the current parameters.
  std::function<void(int epoch, const PolicyNetwork&)> on_epoch_end;
  /// Called with the last finite parameters before a NumericalError escapes.
  std::function<void(const PolicyNetwork&)> on_abort;
};

struct TrainResult {
  PolicyNetwork policy;
  std::vector<TrainLogRow> log;
  BaselineState baseline;
};

/// REINFORCE with an EMA baseline and annealed entropy bonus.
///
/// Each group of `accumulation_steps` targets is rolled out against the
/// same baseline and parameters; the averaged gradient is clipped, an AdamW
/// step is taken, and the group's rewards are folded into the baseline in
/// order.
inline TrainResult train_policy(const Environment& env, const BasisSet& basis,
                                PolicyNetwork policy, const TrainConfig& cfg,
                                const RewardConfig& rcfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  rcfg.validate();
  if (static_cast<std::size_t>(policy.output_dim()) != basis.size())
    throw DimensionError("policy output dimension " + std::to_string(policy.output_dim()) +
                         " does not match basis size " + std::to_string(basis.size()));
  const auto [lo, hi] = env.controllable_range(basis);

  Rng target_rng(derive_seed(cfg.seed, "targets"));
  Rng action_rng(derive_seed(cfg.seed, "actions"));
  Rng noise_rng(derive_seed(cfg.seed, "env-noise"));

  AdamW opt(policy.params().size(),
            AdamWConfig{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  TrainResult result;
  BaselineState baseline;
  PolicyNetwork last_good = policy;
  long step = 0;

  struct Pending {
    PolicyTrace trace;
    std::vector<double> w;
    double log_prob, entropy, p_target, p_actual, reward;
  };
  std::vector<Pending> group;
  Eigen::VectorXd grad(policy.params().size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta = entropy_coefficient(epoch, cfg);
    const auto targets = sample_targets(&target_rng, lo, hi, cfg.targets_per_epoch);
    for (std::size_t start = 0; start < targets.size();
         start += static_cast<std::size_t>(cfg.accumulation_steps)) {
      const std::size_t end =
          std::min(targets.size(), start + static_cast<std::size_t>(cfg.accumulation_steps));
      group.clear();
      for (std::size_t k = start; k < end; ++k) {
        auto trace = policy.trace(normalize_target(targets[k]));
        auto sample = dirichlet_sample(trace.alpha, action_rng);
        double p_actual;
        try {
          p_actual = env.evaluate(fuse_adapters(basis, sample.w), &noise_rng);
        } catch (const Error& e) {
          const std::string where = "environment failed at epoch " + std::to_string(epoch) +
                                    ", step " +
                                    std::to_string(step + static_cast<long>(k - start)) + ": ";
          if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(where + e.what());
          throw Error(where + e.what());
        }
        group.push_back({std::move(trace), std::move(sample.w), sample.log_prob, sample.entropy,
                         targets[k], p_actual, compute_reward(targets[k], p_actual, rcfg)});
      }

      // Every rollout in the group sees the pre-update baseline.
      const double b = baseline.initialized ? baseline.value : group.front().reward;
      const double scale = 1.0 / static_cast<double>(group.size());
      double loss = 0.0;
      grad.setZero();
      for (const auto& g : group) {
        const double advantage = g.reward - b;
        loss += scale * (-advantage * g.log_prob - beta * g.entropy);
        accumulate_rollout_gradient(policy, g.trace, g.w, advantage, beta, scale, grad);
      }
      if (!std::isfinite(loss) || !grad.allFinite()) {
        if (hooks.on_abort) hooks.on_abort(policy);
        throw NumericalError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
      }
      const double norm = clip_grad_norm(grad, cfg.grad_clip_norm);
      opt.step(policy.params(), grad);
      if (!policy.params().allFinite()) {
        if (hooks.on_abort) hooks.on_abort(last_good);
        throw NumericalError("parameters became non-finite at epoch " + std::to_string(epoch));
      }
      last_good.params() = policy.params();

      for (const auto& g : group) {
        baseline = update_baseline(baseline, g.reward, cfg.baseline_decay);
        const auto [amin, amax] =
            std::minmax_element(g.trace.alpha.alpha.begin(), g.trace.alpha.alpha.end());
        result.log.push_back({epoch, step++, g.p_target, g.p_actual, g.reward, baseline.value,
                              beta, norm, *amin, *amax, g.entropy});
      }
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, policy);
  }
  result.policy = std::move(policy);
  result.baseline = baseline;
  return result;
}

}  // namespace trajfuse
