// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trajfuse/policy.hpp"

namespace trajfuse {
namespace {

PolicyNetwork perturbed(int n_out, int hidden, std::uint64_t seed) {
  Rng rng(seed);
  auto net = PolicyNetwork::initialized(n_out, rng, hidden);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] += 0.3 * rng.normal();
  return net;
}

TEST(NormalizeTarget, Range) {
  EXPECT_DOUBLE_EQ(normalize_target(0.0), -1.0);
  EXPECT_DOUBLE_EQ(normalize_target(50.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_target(100.0), 1.0);
  EXPECT_THROW(normalize_target(-0.1), InvalidTarget);
  EXPECT_THROW(normalize_target(100.1), InvalidTarget);
  EXPECT_THROW(normalize_target(std::nan("")), InvalidTarget);
}

TEST(Policy, ParameterCount) {
  const int h = 128, n = 10;
  EXPECT_EQ(PolicyNetwork::param_count(n, h),
            static_cast<std::size_t>(2 * h + 2 * h + h * h + h + 2 * h + n * h + n));
  EXPECT_THROW(PolicyNetwork(1), DimensionError);
}

TEST(Policy, InitialConcentrationsAreSymmetric) {
  Rng rng(1);
  const auto net = PolicyNetwork::initialized(6, rng);
  for (double p : {0.0, 0.25, -0.7, 1.0}) {
    const auto a = net.forward(p);
    ASSERT_EQ(a.size(), 6u);
    for (double v : a.alpha) EXPECT_NEAR(v, std::log(2.0) + 0.01, 1e-15);
  }
}

TEST(Policy, ConcentrationFloor) {
  auto net = perturbed(5, 16, 3);
  // Drive the output bias very negative; alpha must stay above the offset.
  const auto b3 = net.params().size() - 5;
  for (int i = 0; i < 5; ++i) net.params()[b3 + i] = -800.0;
  for (double v : net.forward(0.2).alpha) {
    EXPECT_GE(v, kConcentrationOffset);
    EXPECT_TRUE(std::isfinite(v));
  }
  for (int i = 0; i < 5; ++i) net.params()[b3 + i] = 800.0;
  for (double v : net.forward(0.2).alpha) EXPECT_TRUE(std::isfinite(v));
}

TEST(Policy, BackwardMatchesFiniteDifference) {
  Rng rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const int n_out = 2 + trial;
    auto net = perturbed(n_out, 12, 100 + trial);
    const double p = rng.uniform(-1.0, 1.0);
    std::vector<double> c(n_out);
    for (auto& v : c) v = rng.normal();
    const auto grad = net.backward(net.trace(p), c);
    const auto fd = oracle::central_diff(
        [&](const Eigen::VectorXd& x) {
          PolicyNetwork probe = net;
          probe.params() = x;
          const auto a = probe.forward(p).alpha;
          double s = 0.0;
          for (int i = 0; i < n_out; ++i) s += c[i] * a[i];
          return s;
        },
        net.params(), 1e-6);
    for (Eigen::Index i = 0; i < grad.size(); ++i)
      EXPECT_TRUE(oracle::close(grad[i], fd[i], 1e-4, 1e-7))
          << "param " << i << ": " << grad[i] << " vs " << fd[i];
  }
}

TEST(Policy, BackwardFullWidthSpotCheck) {
  auto net = perturbed(10, kPolicyHidden, 9);
  Rng rng(11);
  std::vector<double> c(10);
  for (auto& v : c) v = rng.normal();
  const double p = 0.37;
  const auto grad = net.backward(net.trace(p), c);
  for (int k = 0; k < 200; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(grad.size()));
    auto eval = [&](double delta) {
      PolicyNetwork probe = net;
      probe.params()[i] += delta;
      const auto a = probe.forward(p).alpha;
      double s = 0.0;
      for (int j = 0; j < 10; ++j) s += c[j] * a[j];
      return s;
    };
    const double fd = (eval(1e-6) - eval(-1e-6)) / 2e-6;
    EXPECT_TRUE(oracle::close(grad[i], fd, 1e-4, 1e-7)) << i << ": " << grad[i] << " vs " << fd;
  }
}

TEST(Policy, BackwardRejectsWrongLength) {
  const auto net = perturbed(3, 8, 1);
  EXPECT_THROW(net.backward(net.trace(0.0), std::vector<double>{1.0}), DimensionError);
}

TEST(PolicyIO, RoundTripIsExact) {
  const auto net = perturbed(7, 128, 13);
  const auto text = policy_to_json(net, 987654321ULL);
  const auto back = policy_from_json(text);
  EXPECT_EQ(back.seed, 987654321ULL);
  EXPECT_EQ(back.network.params(), net.params());
  EXPECT_EQ(policy_to_json(back.network, back.seed), text);
  EXPECT_EQ(back.network.forward(0.3).alpha, net.forward(0.3).alpha);
}

TEST(PolicyIO, Errors) {
  const auto net = perturbed(3, 4, 2);
  auto text = policy_to_json(net, 1);
  auto bad_version = text;
  bad_version.replace(bad_version.find("\"format_version\": 1"), 19, "\"format_version\": 9");
  EXPECT_THROW(policy_from_json(bad_version), VersionError);
  auto bad_dim = text;
  bad_dim.replace(bad_dim.find("\"output_dim\": 3"), 15, "\"output_dim\": 4");
  EXPECT_THROW(policy_from_json(bad_dim), FormatError);
  EXPECT_THROW(policy_from_json("{}"), FormatError);
  EXPECT_THROW(policy_from_json("not json"), FormatError);
}

}  // namespace
}  // namespace trajfuse
