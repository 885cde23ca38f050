// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajfuse/adapter.hpp"
#include "trajfuse/environment.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/likert.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {

struct ToySFTConfig {
  int n_items = 50;
  int feature_dim = 16;
  int lora_rank = 8;
  double sft_lr = 0.1;
  int sft_steps = 120;
  int batch_size = 8;
  int n_train = 256;
  /// Probability that a training label is replaced by a uniformly random answer.
  double label_noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_items < 1 || feature_dim < 2 || lora_rank < 1 || sft_steps < 1 || batch_size < 1 ||
        n_train < 1)
      throw ConfigError("toy SFT sizes must be positive");
    if (lora_rank > feature_dim) throw ConfigError("lora_rank cannot exceed feature_dim");
    if (!(sft_lr > 0.0)) throw ConfigError("sft_lr must be positive");
    if (!(label_noise >= 0.0 && label_noise <= 1.0))
      throw ConfigError("label_noise must be in [0,1]");
  }
};

inline constexpr int kLikertClasses = 5;

/// Frozen linear "subject": logits = U (W0 + delta) x for an item with
/// features x. Feature 0 is a constant shared by every prompt (the system
/// prompt), which lets a delta shift answers for all items at once. The
/// adapter delta is a d x d matrix stored row-major, the analog of a
/// value-projection update.
class ToySubject {
 public:
  explicit ToySubject(const ToySFTConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(cfg.seed, "toy-subject"));
    const int d = cfg.feature_dim;
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    w0_ = random_matrix(d, d, s, rng);
    readout_ = random_matrix(kLikertClasses, d, s, rng);
    items_ = random_matrix(d, cfg.n_items, 1.0, rng);
    items_.row(0).setOnes();
  }

  const ToySFTConfig& config() const { return cfg_; }
  int dim() const { return cfg_.feature_dim; }
  const Eigen::MatrixXd& base_weight() const { return w0_; }
  const Eigen::MatrixXd& readout() const { return readout_; }

  ShapeMeta shape_meta() const {
    return {{"value_proj.delta", {cfg_.feature_dim, cfg_.feature_dim}}};
  }

  Eigen::MatrixXd delta_matrix(const Adapter& a) const {
    if (a.shape_meta() != shape_meta())
      throw DimensionError("adapter shape does not match the toy subject");
    const int d = cfg_.feature_dim;
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) m(r, c) = a.data()[static_cast<std::size_t>(r * d + c)];
    return m;
  }

  Adapter to_adapter(const Eigen::MatrixXd& delta) const {
    const int d = cfg_.feature_dim;
    std::vector<double> data(static_cast<std::size_t>(d * d));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) data[static_cast<std::size_t>(r * d + c)] = delta(r, c);
    return Adapter(std::move(data), shape_meta());
  }

  /// Greedy (argmax) Likert answers to the questionnaire.
  std::vector<LikertResponse> answer(const Eigen::MatrixXd& delta) const {
    const Eigen::MatrixXd logits = readout_ * ((w0_ + delta) * items_);
    std::vector<LikertResponse> out;
    out.reserve(static_cast<std::size_t>(cfg_.n_items));
    for (int j = 0; j < cfg_.n_items; ++j) {
      Eigen::Index best = 0;
      logits.col(j).maxCoeff(&best);
      out.push_back({j, static_cast<int>(best) + 1});
    }
    return out;
  }

  /// Percentage for the left pole (the pole the training data pushes toward).
  double percentage(const Eigen::MatrixXd& delta) const {
    return trait_percentage(answer(delta), Pole::kLeft);
  }

 private:
  static Eigen::MatrixXd random_matrix(int rows, int cols, double scale, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
    return m;
  }

  ToySFTConfig cfg_;
  Eigen::MatrixXd w0_;
  Eigen::MatrixXd readout_;
  Eigen::MatrixXd items_;
};

class ToySFTEnvironment final : public Environment {
 public:
  explicit ToySFTEnvironment(const ToySFTConfig& cfg)
      : subject_(std::make_shared<const ToySubject>(cfg)) {}

  double evaluate(const Adapter& fused, Rng*) const override {
    return subject_->percentage(subject_->delta_matrix(fused));
  }

  std::string descriptor() const override {
    return "toysft(items=" + std::to_string(subject_->config().n_items) +
           ", dim=" + std::to_string(subject_->dim()) + ")";
  }

  const ToySubject& subject() const { return *subject_; }

 private:
  std::shared_ptr<const ToySubject> subject_;
};

/// Low-rank factors of one checkpoint; delta = B * A.
struct LoraFactors {
  Eigen::MatrixXd b;  // d x r
  Eigen::MatrixXd a;  // r x d
};

struct ToySFTResult {
  TrajectoryLibrary library;
  std::vector<LoraFactors> factors;  // parallel to library.checkpoints
  std::vector<std::int64_t> skipped_steps;
};

/// Fine-tunes a rank-r delta on trait-extreme labels and records the
/// questionnaire percentage after every update. Step 0 is the untouched
/// subject (delta = 0).
inline ToySFTResult toy_sft_collect(const ToySFTConfig& cfg) {
  cfg.validate();
  const ToySubject subject(cfg);
  const int d = cfg.feature_dim;
  const int r = cfg.lora_rank;
  Rng rng(derive_seed(cfg.seed, "toy-sft"));

  // Training prompts and labels: strong agreement with the left pole,
  // occasionally the milder answer, with label noise on top.
  Eigen::MatrixXd prompts(d, cfg.n_train);
  for (int c = 0; c < cfg.n_train; ++c) {
    prompts(0, c) = 1.0;
    for (int i = 1; i < d; ++i) prompts(i, c) = rng.normal();
  }
  std::vector<int> labels(static_cast<std::size_t>(cfg.n_train));
  for (auto& y : labels) {
    if (rng.uniform() < cfg.label_noise)
      y = static_cast<int>(rng.next_u64() % kLikertClasses);
    else
      y = rng.uniform() < 0.8 ? 0 : 1;
  }

  LoraFactors f{Eigen::MatrixXd::Zero(d, r), Eigen::MatrixXd(r, d)};
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < r; ++i) f.a(i, c) = rng.normal() / std::sqrt(static_cast<double>(d));

  ToySFTResult result;
  result.library.trait_pair = {"E", "I"};
  result.library.target_pole = "E";

  auto record = [&](std::int64_t step) {
    const Eigen::MatrixXd delta = f.b * f.a;
    try {
      const double p = subject.percentage(delta);
      result.library.checkpoints.push_back({step, subject.to_adapter(delta), p});
      result.factors.push_back(f);
    } catch (const NeutralOnly&) {
      result.skipped_steps.push_back(step);
    }
  };

  record(0);
  const Eigen::MatrixXd& u = subject.readout();
  for (int step = 1; step <= cfg.sft_steps; ++step) {
    const Eigen::MatrixXd w = subject.base_weight() + f.b * f.a;
    Eigen::MatrixXd grad_delta = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < cfg.batch_size; ++k) {
      const int idx = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.n_train));
      const Eigen::VectorXd x = prompts.col(idx);
      Eigen::VectorXd logits = u * (w * x);
      logits.array() -= logits.maxCoeff();
      Eigen::VectorXd p = logits.array().exp();
      p /= p.sum();
      p[labels[static_cast<std::size_t>(idx)]] -= 1.0;
      grad_delta += (u.transpose() * p) * x.transpose();
    }
    grad_delta /= cfg.batch_size;
    const Eigen::MatrixXd grad_b = grad_delta * f.a.transpose();
    const Eigen::MatrixXd grad_a = f.b.transpose() * grad_delta;
    f.b -= cfg.sft_lr * grad_b;
    f.a -= cfg.sft_lr * grad_a;
    record(step);
  }
  return result;
}

}  // namespace trajfuse
