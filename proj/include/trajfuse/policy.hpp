// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trajfuse/dirichlet.hpp"
#include "trajfuse/error.hpp"
#include "trajfuse/library_io.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {

inline constexpr double kConcentrationOffset = 0.01;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr int kPolicyHidden = 128;

/// Maps a target intensity in [0,100] to the network input in [-1,1].
inline double normalize_target(double p_target) {
  if (!(p_target >= 0.0 && p_target <= 100.0))
    throw InvalidTarget("target " + std::to_string(p_target) + " outside [0,100]");
  return (p_target - 50.0) / 50.0;
}

namespace detail {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Intermediate activations kept for the backward pass.
struct PolicyTrace {
  double input = 0.0;
  Eigen::VectorXd xhat1, inv_std1, h1;  // inv_std stored as a 1-vector
  Eigen::VectorXd xhat2, inv_std2, h2;
  Eigen::VectorXd logits;
  ConcentrationVector alpha;
};

/// Two hidden blocks (affine -> LayerNorm -> tanh) of width `hidden`, then
/// an affine head with softplus + 0.01. All parameters live in one flat
/// vector so optimizers and gradient checks can treat them uniformly.
///
/// Flat layout: W1 (H x 1), b1, g1, beta1, W2 (H x H), b2, g2, beta2,
/// W3 (N x H), b3. Matrices are column-major.
class PolicyNetwork {
 public:
  using Vector = Eigen::VectorXd;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  PolicyNetwork() = default;

  /// All-zero parameters.
  explicit PolicyNetwork(int n_out, int hidden = kPolicyHidden)
      : n_out_(n_out), hidden_(hidden) {
    if (n_out < 2) throw DimensionError("policy output dimension must be >= 2");
    if (hidden < 1) throw DimensionError("policy hidden width must be positive");
    params_ = Vector::Zero(param_count(n_out, hidden));
  }

  /// Hidden affines ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
  /// biases, LayerNorm gain 1 / bias 0, output head zero (symmetric
  /// alpha = ln 2 + 0.01 at start).
  static PolicyNetwork initialized(int n_out, Rng& rng, int hidden = kPolicyHidden) {
    PolicyNetwork net(n_out, hidden);
    auto fill = [&](std::size_t off, std::size_t count, double bound) {
      for (std::size_t i = 0; i < count; ++i)
        net.params_[off + i] = rng.uniform(-bound, bound);
    };
    const auto h = static_cast<std::size_t>(hidden);
    const double b1 = 1.0;
    const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill(net.off_w1(), h, b1);
    fill(net.off_b1(), h, b1);
    net.params_.segment(net.off_g1(), hidden).setOnes();
    fill(net.off_w2(), h * h, b2);
    fill(net.off_b2(), h, b2);
    net.params_.segment(net.off_g2(), hidden).setOnes();
    return net;
  }

  static std::size_t param_count(int n_out, int hidden) {
    const auto h = static_cast<std::size_t>(hidden);
    const auto n = static_cast<std::size_t>(n_out);
    return h + 3 * h + h * h + 3 * h + n * h + n;
  }

  int output_dim() const { return n_out_; }
  int hidden_dim() const { return hidden_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  PolicyTrace trace(double p_hat) const {
    if (!(p_hat >= -1.0 && p_hat <= 1.0))
      throw InvalidTarget("normalized target " + std::to_string(p_hat) + " outside [-1,1]");
    PolicyTrace t;
    t.input = p_hat;
    const Vector z1 = vec(off_w1(), hidden_) * p_hat + vec(off_b1(), hidden_);
    t.h1 = norm_tanh(z1, off_g1(), off_be1(), t.xhat1, t.inv_std1);
    const Vector z2 = mat(off_w2(), hidden_, hidden_) * t.h1 + vec(off_b2(), hidden_);
    t.h2 = norm_tanh(z2, off_g2(), off_be2(), t.xhat2, t.inv_std2);
    t.logits = mat(off_w3(), n_out_, hidden_) * t.h2 + vec(off_b3(), n_out_);
    t.alpha.alpha.resize(static_cast<std::size_t>(n_out_));
    for (int i = 0; i < n_out_; ++i) {
      const double a = detail::softplus(t.logits[i]) + kConcentrationOffset;
      if (!std::isfinite(a)) throw NumericalError("policy produced a non-finite concentration");
      t.alpha.alpha[static_cast<std::size_t>(i)] = a;
    }
    return t;
  }

  ConcentrationVector forward(double p_hat) const { return trace(p_hat).alpha; }

  /// Gradient of a scalar loss w.r.t. the flat parameters, given dL/dalpha.
  Vector backward(const PolicyTrace& t, std::span<const double> dalpha) const {
    if (dalpha.size() != static_cast<std::size_t>(n_out_))
      throw DimensionError("dalpha has wrong length");
    Vector grad = Vector::Zero(params_.size());
    Vector dlogits(n_out_);
    for (int i = 0; i < n_out_; ++i)
      dlogits[i] = dalpha[static_cast<std::size_t>(i)] * detail::sigmoid(t.logits[i]);

    Eigen::Map<Eigen::MatrixXd>(grad.data() + off_w3(), n_out_, hidden_) =
        dlogits * t.h2.transpose();
    grad.segment(off_b3(), n_out_) = dlogits;
    const Vector dh2 = mat(off_w3(), n_out_, hidden_).transpose() * dlogits;

    const Vector dz2 = norm_tanh_backward(dh2, t.h2, t.xhat2, t.inv_std2[0],
                                          off_g2(), off_be2(), grad);
    Eigen::Map<Eigen::MatrixXd>(grad.data() + off_w2(), hidden_, hidden_) =
        dz2 * t.h1.transpose();
    grad.segment(off_b2(), hidden_) = dz2;
    const Vector dh1 = mat(off_w2(), hidden_, hidden_).transpose() * dz2;

    const Vector dz1 = norm_tanh_backward(dh1, t.h1, t.xhat1, t.inv_std1[0],
                                          off_g1(), off_be1(), grad);
    grad.segment(off_w1(), hidden_) = dz1 * t.input;
    grad.segment(off_b1(), hidden_) = dz1;
    return grad;
  }

 private:
  std::size_t off_w1() const { return 0; }
  std::size_t off_b1() const { return off_w1() + h(); }
  std::size_t off_g1() const { return off_b1() + h(); }
  std::size_t off_be1() const { return off_g1() + h(); }
  std::size_t off_w2() const { return off_be1() + h(); }
  std::size_t off_b2() const { return off_w2() + h() * h(); }
  std::size_t off_g2() const { return off_b2() + h(); }
  std::size_t off_be2() const { return off_g2() + h(); }
  std::size_t off_w3() const { return off_be2() + h(); }
  std::size_t off_b3() const { return off_w3() + static_cast<std::size_t>(n_out_) * h(); }
  std::size_t h() const { return static_cast<std::size_t>(hidden_); }

  ConstVectorMap vec(std::size_t off, int n) const {
    return ConstVectorMap(params_.data() + off, n);
  }
  ConstMatrixMap mat(std::size_t off, int rows, int cols) const {
    return ConstMatrixMap(params_.data() + off, rows, cols);
  }

  Vector norm_tanh(const Vector& z, std::size_t off_g, std::size_t off_b, Vector& xhat,
                   Vector& inv_std) const {
    const double mu = z.mean();
    const double var = (z.array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat = (z.array() - mu) * inv;
    inv_std = Vector::Constant(1, inv);
    Vector out = (vec(off_g, hidden_).array() * xhat.array() + vec(off_b, hidden_).array())
                     .tanh()
                     .matrix();
    if (!out.allFinite()) throw NumericalError("non-finite hidden activation");
    return out;
  }

  Vector norm_tanh_backward(const Vector& dh, const Vector& h_out, const Vector& xhat,
                            double inv, std::size_t off_g, std::size_t off_b,
                            Vector& grad) const {
    const Vector dn = (dh.array() * (1.0 - h_out.array().square())).matrix();
    grad.segment(off_g, hidden_) = (dn.array() * xhat.array()).matrix();
    grad.segment(off_b, hidden_) = dn;
    const Vector dxhat = (dn.array() * vec(off_g, hidden_).array()).matrix();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat.array() * xhat.array()).mean();
    return (inv * (dxhat.array() - m1 - xhat.array() * m2)).matrix();
  }

  int n_out_ = 0;
  int hidden_ = 0;
  Vector params_;
};

inline constexpr int kPolicyFormatVersion = 1;

inline std::string policy_to_json(const PolicyNetwork& net, std::uint64_t seed) {
  std::string out = "{\n  \"format_version\": " + std::to_string(kPolicyFormatVersion) +
                    ",\n  \"kind\": \"policy\",\n  \"input_dim\": 1,\n  \"hidden\": [" +
                    std::to_string(net.hidden_dim()) + "," + std::to_string(net.hidden_dim()) +
                    "],\n  \"output_dim\": " + std::to_string(net.output_dim()) +
                    ",\n  \"epsilon\": " + detail::format_double(kConcentrationOffset) +
                    ",\n  \"layernorm_eps\": " + detail::format_double(kLayerNormEps) +
                    ",\n  \"seed\": " + std::to_string(seed) + ",\n  \"params\": ";
  detail::append_numbers(out, std::span<const double>(net.params().data(),
                                                      static_cast<std::size_t>(net.params().size())));
  out += "\n}\n";
  return out;
}

struct LoadedPolicy {
  PolicyNetwork network;
  std::uint64_t seed = 0;
};

inline LoadedPolicy policy_from_json(const std::string& text,
                                     const std::string& source = "<memory>") {
  const auto j = detail::parse_json(text, source);
  const int version = detail::field<int>(j, "format_version", "");
  if (version != kPolicyFormatVersion)
    throw VersionError(source + ": policy format_version " + std::to_string(version));
  if (detail::field<std::string>(j, "kind", "") != "policy")
    throw FormatError(source + ": not a policy file");
  const auto hidden = detail::field<std::vector<int>>(j, "hidden", "");
  if (hidden.size() != 2 || hidden[0] != hidden[1])
    throw FormatError(source + ": expected two equal hidden widths");
  const int n_out = detail::field<int>(j, "output_dim", "");
  if (n_out < 2 || hidden[0] < 1) throw FormatError(source + ": invalid layer dims");
  const auto params = detail::field<std::vector<double>>(j, "params", "");
  LoadedPolicy out{PolicyNetwork(n_out, hidden[0]), detail::field<std::uint64_t>(j, "seed", "")};
  if (params.size() != static_cast<std::size_t>(out.network.params().size()))
    throw FormatError(source + ": params has " + std::to_string(params.size()) +
                      " values, expected " + std::to_string(out.network.params().size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    out.network.params()[static_cast<Eigen::Index>(i)] = params[i];
  return out;
}

inline void save_policy(const PolicyNetwork& net, std::uint64_t seed,
                        const std::filesystem::path& path) {
  detail::write_file(path, policy_to_json(net, seed));
}

inline LoadedPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(detail::read_file(path), path.string());
}

}  // namespace trajfuse
