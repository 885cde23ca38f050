// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <gtest/gtest.h>

#include "trajfuse/random.hpp"
#include "trajfuse/special_functions.hpp"

namespace trajfuse {
namespace {

TEST(Digamma, KnownValues) {
  EXPECT_NEAR(digamma(1.0), -kEulerGamma, 1e-10);
  EXPECT_NEAR(digamma(0.5), -kEulerGamma - 2.0 * std::log(2.0), 1e-10);
  EXPECT_NEAR(digamma(2.0), 1.0 - kEulerGamma, 1e-10);
}

TEST(Digamma, Recurrence) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.01, 100.0);
    EXPECT_NEAR(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-10) << "x=" << x;
  }
}

TEST(Digamma, MatchesBoost) {
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::exp(rng.uniform(std::log(1e-6), std::log(1e6)));
    const double ref = boost::math::digamma(x);
    EXPECT_NEAR(digamma(x), ref, 1e-12 * std::max(1.0, std::abs(ref))) << "x=" << x;
  }
}

TEST(Trigamma, KnownValuesAndBoost) {
  const double pi = std::acos(-1.0);
  EXPECT_NEAR(trigamma(1.0), pi * pi / 6.0, 1e-12);
  EXPECT_NEAR(trigamma(0.5), pi * pi / 2.0, 1e-12);
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::exp(rng.uniform(std::log(1e-4), std::log(1e6)));
    const double ref = boost::math::trigamma(x);
    EXPECT_NEAR(trigamma(x), ref, 1e-11 * std::abs(ref)) << "x=" << x;
  }
}

TEST(Trigamma, IsDerivativeOfDigamma) {
  for (double x : {0.05, 0.3, 1.0, 2.5, 7.0, 40.0}) {
    const double h = 1e-5 * x;
    const double fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
    EXPECT_NEAR(trigamma(x), fd, 1e-6 * trigamma(x)) << "x=" << x;
  }
}

TEST(LogGamma, Values) {
  EXPECT_NEAR(log_gamma(1.0), 0.0, 1e-15);
  EXPECT_NEAR(log_gamma(5.0), std::log(24.0), 1e-13);
  EXPECT_NEAR(log_gamma(0.5), 0.5 * std::log(std::acos(-1.0)), 1e-13);
}

TEST(SpecialFunctions, DomainErrors) {
  for (double x : {0.0, -1.0, -0.5, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::infinity()}) {
    EXPECT_THROW(digamma(x), DomainError);
    EXPECT_THROW(trigamma(x), DomainError);
    EXPECT_THROW(log_gamma(x), DomainError);
  }
}

}  // namespace
}  // namespace trajfuse
