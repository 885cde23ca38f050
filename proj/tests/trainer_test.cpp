// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trajfuse/trajfuse.hpp"

namespace trajfuse {
namespace {

TEST(Reward, WorkedValues) {
  const RewardConfig cfg;
  EXPECT_NEAR(compute_reward(40.0, 40.0, cfg), 1.5, 1e-12);
  EXPECT_NEAR(compute_reward(40.0, 45.0, cfg), 0.36788, 1e-5);
  EXPECT_NEAR(compute_reward(40.0, 39.1, cfg), 1.33527, 1e-5);
  EXPECT_NEAR(compute_reward(40.0, 41.0, cfg), std::exp(-0.2), 1e-12);  // no bonus at d = delta
}

TEST(Reward, MonotoneAndBounded) {
  const RewardConfig cfg;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) {
    const double r = compute_reward(0.0, i * 0.01, cfg);
    EXPECT_LE(r, prev);
    EXPECT_GT(r, 0.0);
    EXPECT_LE(r, 1.0 + cfg.bonus);
    prev = r;
  }
}

TEST(Reward, Linear) {
  RewardConfig cfg;
  cfg.kind = RewardKind::kLinear;
  EXPECT_DOUBLE_EQ(compute_reward(30.0, 30.0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(compute_reward(30.0, 80.0, cfg), 0.5);
}

TEST(Reward, ConfigValidation) {
  RewardConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.delta = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Baseline, Examples) {
  auto b = update_baseline({}, 1.5, 0.95);
  EXPECT_TRUE(b.initialized);
  EXPECT_DOUBLE_EQ(b.value, 1.5);
  b = update_baseline({0.5, true}, 1.5, 0.95);
  EXPECT_NEAR(b.value, 0.55, 1e-15);
  EXPECT_THROW(update_baseline(b, std::nan(""), 0.95), NumericalError);
}

TEST(Baseline, ConvergesMonotonically) {
  BaselineState b{0.0, true};
  double prev = 0.0;
  for (int i = 0; i < 500; ++i) {
    b = update_baseline(b, 1.0, 0.95);
    EXPECT_GE(b.value, prev);
    EXPECT_LE(b.value, 1.0);
    prev = b.value;
  }
  EXPECT_NEAR(b.value, 1.0, 1e-10);
}

TEST(EntropyCoefficient, Schedule) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(entropy_coefficient(0, cfg), 0.1);
  EXPECT_NEAR(entropy_coefficient(1, cfg), 0.09, 1e-15);
  EXPECT_NEAR(entropy_coefficient(21, cfg), 0.1 * std::pow(0.9, 21), 1e-15);
  EXPECT_DOUBLE_EQ(entropy_coefficient(22, cfg), 0.01);
  EXPECT_DOUBLE_EQ(entropy_coefficient(500, cfg), 0.01);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.entropy_min = 0.2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.baseline_decay = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SampleTargets, UnperturbedIsLinspace) {
  const auto t = sample_targets(nullptr, 10.0, 90.0, 32);
  ASSERT_EQ(t.size(), 32u);
  EXPECT_DOUBLE_EQ(t.front(), 10.0);
  EXPECT_DOUBLE_EQ(t.back(), 90.0);
  for (int k = 0; k < 32; ++k) EXPECT_NEAR(t[k], 10.0 + 80.0 * k / 31.0, 1e-12);
}

TEST(SampleTargets, JitterBoundedAndClamped) {
  Rng rng(3);
  const double lo = 12.5, hi = 97.0, spacing = (hi - lo) / 31.0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto t = sample_targets(&rng, lo, hi, 32);
    for (int k = 0; k < 32; ++k) {
      EXPECT_GE(t[k], lo);
      EXPECT_LE(t[k], hi);
      EXPECT_LE(std::abs(t[k] - (lo + spacing * k)), 0.5 * spacing + 1e-12);
    }
  }
}

TEST(SampleTargets, DegenerateRange) {
  EXPECT_THROW(sample_targets(nullptr, 50.0, 50.0, 32), DegenerateRange);
  EXPECT_THROW(sample_targets(nullptr, 60.0, 50.0, 32), DegenerateRange);
}

TEST(ClipGradNorm, ScalesToMax) {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 0.5), 5.0);
  EXPECT_NEAR(g.norm(), 0.5, 1e-15);
  EXPECT_NEAR(g[0] / g[1], 0.75, 1e-15);
  Eigen::VectorXd small(2);
  small << 0.1, 0.2;
  const Eigen::VectorXd before = small;
  clip_grad_norm(small, 0.5);
  EXPECT_EQ(small, before);
}

TEST(AdamW, FirstStepsMatchHandComputation) {
  const AdamWConfig cfg{1e-3, 0.9, 0.999, 1e-8, 0.01};
  AdamW opt(2, cfg);
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -2.0;
  g << 0.5, -0.25;
  // Independent reference: decoupled decay then bias-corrected moment step.
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
  for (int t = 1; t <= 3; ++t) {
    opt.step(p, g);
    for (int i = 0; i < 2; ++i) {
      ref[i] *= 1.0 - cfg.lr * cfg.weight_decay;
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      ref[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
      EXPECT_NEAR(p[i], ref[i], 1e-15) << "t=" << t << " i=" << i;
    }
  }
}

PolicyNetwork perturbed(int n_out, int hidden, std::uint64_t seed) {
  Rng rng(seed);
  auto net = PolicyNetwork::initialized(n_out, rng, hidden);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] += 0.2 * rng.normal();
  return net;
}

TEST(ReinforceLoss, GradientMatchesFiniteDifference) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const auto net = perturbed(n, 10, 1000 + trial);
    std::vector<Rollout> batch;
    for (int k = 0; k < 4; ++k) {
      const double p_hat = rng.uniform(-1.0, 1.0);
      batch.push_back({p_hat, dirichlet_sample(net.forward(p_hat), rng).w, rng.normal()});
    }
    const double beta = rng.uniform(0.0, 0.1);
    const auto g = reinforce_loss_gradient(net, batch, beta);
    const auto fd = oracle::central_diff(
        [&](const Eigen::VectorXd& x) {
          PolicyNetwork probe = net;
          probe.params() = x;
          return reinforce_loss(probe, batch, beta);
        },
        net.params(), 1e-6);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      ASSERT_TRUE(oracle::close(g[i], fd[i], 1e-4, 1e-7))
          << "trial " << trial << " param " << i << ": " << g[i] << " vs " << fd[i];
  }
}

TEST(ReinforceLoss, EmptyBatch) {
  const auto net = perturbed(3, 4, 1);
  EXPECT_THROW(reinforce_loss(net, {}, 0.1), EmptyInput);
  EXPECT_THROW(reinforce_loss_gradient(net, {}, 0.1), EmptyInput);
}

AnalyticEnvConfig identity_env() {
  AnalyticEnvConfig c;
  c.basis_intensities = {5, 20, 40, 60, 80, 95};
  c.warp_gamma = 1.0;
  c.noise_sd = 0.0;
  return c;
}

double grid_mae(const PolicyNetwork& net, const BasisSet& basis, const Environment& env) {
  const auto targets = default_eval_targets(basis.min_intensity(), basis.max_intensity());
  return eval_grid(policy_mean_controller(net, basis), env, targets, "p").mae;
}

TEST(TrainPolicy, ImprovesOnIdentityEnvironment) {
  const auto cfg = identity_env();
  const AnalyticEnvironment env(cfg);
  const auto basis = analytic_basis(cfg);
  Rng init(1);
  const auto net = PolicyNetwork::initialized(6, init);
  TrainConfig tcfg;
  tcfg.epochs = 300;
  tcfg.seed = 5;
  const auto result = train_policy(env, basis, net, tcfg, RewardConfig{});
  const double before = grid_mae(net, basis, env);
  const double after = grid_mae(result.policy, basis, env);
  EXPECT_LT(after, before);
  EXPECT_LT(after, 5.0);
  EXPECT_EQ(result.log.size(), static_cast<std::size_t>(300 * 32));
}

TEST(TrainPolicy, BitwiseReproducible) {
  AnalyticEnvConfig cfg = identity_env();
  cfg.warp_gamma = 3.0;
  cfg.noise_sd = 1.0;
  const AnalyticEnvironment env(cfg);
  const auto basis = analytic_basis(cfg);
  TrainConfig tcfg;
  tcfg.epochs = 5;
  tcfg.seed = 77;
  auto run = [&] {
    Rng init(3);
    return train_policy(env, basis, PolicyNetwork::initialized(6, init), tcfg, RewardConfig{});
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.policy.params(), b.policy.params());
  std::ostringstream la, lb;
  write_training_log(la, a.log);
  write_training_log(lb, b.log);
  EXPECT_EQ(la.str(), lb.str());
  tcfg.seed = 78;
  EXPECT_NE(run().policy.params(), a.policy.params());
}

TEST(TrainPolicy, LogColumnsAndBaselineSemantics) {
  const auto cfg = identity_env();
  const AnalyticEnvironment env(cfg);
  const auto basis = analytic_basis(cfg);
  TrainConfig tcfg;
  tcfg.epochs = 2;
  Rng init(2);
  const auto r = train_policy(env, basis, PolicyNetwork::initialized(6, init), tcfg, RewardConfig{});
  std::ostringstream os;
  write_training_log(os, r.log);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "epoch,step,P_target,P_actual,reward,baseline,beta,grad_norm,alpha_min,alpha_max");
  // Replay the logged rewards through the EMA.
  BaselineState b;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    b = update_baseline(b, r.log[i].reward, tcfg.baseline_decay);
    EXPECT_DOUBLE_EQ(r.log[i].baseline, b.value);
    EXPECT_EQ(r.log[i].step, static_cast<long>(i));
    EXPECT_DOUBLE_EQ(r.log[i].beta, entropy_coefficient(r.log[i].epoch, tcfg));
    EXPECT_LE(r.log[i].alpha_min, r.log[i].alpha_max);
  }
}

/// Returns a fixed measurement and exposes a near-point controllable range,
/// so every rollout earns (almost) the same reward.
class ConstantEnvironment final : public Environment {
 public:
  explicit ConstantEnvironment(double value) : value_(value) {}
  double evaluate(const Adapter&, Rng*) const override { return value_; }
  std::string descriptor() const override { return "constant"; }
  std::pair<double, double> controllable_range(const BasisSet&) const override {
    return {50.0, 50.0 + 1e-9};
  }

 private:
  double value_;
};

TEST(TrainPolicy, EntropyDrivesTowardSymmetricMaximum) {
  const auto basis = analytic_basis(identity_env());
  const ConstantEnvironment env(50.0);
  TrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.entropy_coeff_init = 5.0;
  tcfg.entropy_min = 5.0;
  Rng init(4);
  const auto net = PolicyNetwork::initialized(6, init);
  const auto r = train_policy(env, basis, net, tcfg, RewardConfig{});
  auto dist_to_uniform = [](const ConcentrationVector& a) {
    double s = 0.0;
    for (double v : a.alpha) s += std::abs(v - 1.0);
    return s;
  };
  const double before = dist_to_uniform(net.forward(0.0));
  const double after = dist_to_uniform(r.policy.forward(0.0));
  EXPECT_LT(after, 0.25 * before);
  EXPECT_GT(dirichlet_entropy(r.policy.forward(0.0).alpha),
            dirichlet_entropy(net.forward(0.0).alpha));
}

class FailingEnvironment final : public Environment {
 public:
  explicit FailingEnvironment(bool nan) : nan_(nan) {}
  double evaluate(const Adapter&, Rng*) const override {
    if (nan_) return std::numeric_limits<double>::quiet_NaN();
    throw DimensionError("boom");
  }
  std::string descriptor() const override { return "failing"; }

 private:
  bool nan_;
};

TEST(TrainPolicy, EnvironmentErrorCarriesContext) {
  const auto basis = analytic_basis(identity_env());
  Rng init(1);
  try {
    train_policy(FailingEnvironment(false), basis, PolicyNetwork::initialized(6, init),
                 TrainConfig{}, RewardConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("boom"), std::string::npos) << msg;
  }
}

TEST(TrainPolicy, NonFiniteAbortsWithLastGood) {
  const auto basis = analytic_basis(identity_env());
  Rng init(1);
  const auto net = PolicyNetwork::initialized(6, init);
  bool aborted = false;
  TrainHooks hooks;
  hooks.on_abort = [&](const PolicyNetwork& p) {
    aborted = true;
    EXPECT_TRUE(p.params().allFinite());
    EXPECT_EQ(p.params(), net.params());
  };
  EXPECT_THROW(train_policy(FailingEnvironment(true), basis, net, TrainConfig{}, RewardConfig{}, hooks),
               NumericalError);
  EXPECT_TRUE(aborted);
}

TEST(TrainPolicy, DimensionMismatch) {
  const auto basis = analytic_basis(identity_env());
  Rng init(1);
  EXPECT_THROW(train_policy(AnalyticEnvironment(identity_env()), basis,
                            PolicyNetwork::initialized(4, init), TrainConfig{}, RewardConfig{}),
               DimensionError);
}

TEST(TrainPolicy, EpochHookCalledEachEpoch) {
  const auto cfg = identity_env();
  const auto basis = analytic_basis(cfg);
  Rng init(1);
  TrainConfig tcfg;
  tcfg.epochs = 3;
  std::vector<int> seen;
  TrainHooks hooks;
  hooks.on_epoch_end = [&](int e, const PolicyNetwork&) { seen.push_back(e); };
  train_policy(AnalyticEnvironment(cfg), basis, PolicyNetwork::initialized(6, init), tcfg,
               RewardConfig{}, hooks);
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
}

}  // namespace
}  // namespace trajfuse
