// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trajfuse/likert.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {
namespace {

std::vector<LikertResponse> responses(const std::vector<int>& scores) {
  std::vector<LikertResponse> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({static_cast<int>(i), scores[i]});
  return out;
}

TEST(ScoreItem, PointTable) {
  const int expect[5][2] = {{2, 0}, {1, 0}, {0, 0}, {0, 1}, {0, 2}};
  for (int s = 1; s <= 5; ++s) {
    const auto p = score_item({0, s});
    EXPECT_EQ(p.s_left, expect[s - 1][0]);
    EXPECT_EQ(p.s_right, expect[s - 1][1]);
  }
}

TEST(ScoreItem, RejectsOutOfScale) {
  EXPECT_THROW(score_item({3, 0}), InvalidScore);
  EXPECT_THROW(score_item({3, 6}), InvalidScore);
}

TEST(TraitPercentage, WorkedExamples) {
  EXPECT_DOUBLE_EQ(trait_percentage(responses({1, 1, 1}), Pole::kLeft), 100.0);
  EXPECT_DOUBLE_EQ(trait_percentage(responses({1, 5}), Pole::kLeft), 50.0);
  EXPECT_DOUBLE_EQ(trait_percentage(responses({2, 3, 5}), Pole::kLeft), 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(trait_percentage(responses({2, 3, 5}), Pole::kRight), 200.0 / 3.0);
  EXPECT_DOUBLE_EQ(trait_percentage(responses({4, 4, 3}), Pole::kLeft), 0.0);
}

TEST(TraitPercentage, Errors) {
  EXPECT_THROW(trait_percentage(responses({}), Pole::kLeft), EmptyInput);
  EXPECT_THROW(trait_percentage(responses({3, 3, 3}), Pole::kLeft), NeutralOnly);
  EXPECT_THROW(trait_percentage(responses({1, 9}), Pole::kLeft), InvalidScore);
}

TEST(TraitPercentage, MatchesPointCounterAndPolesSumTo100) {
  Rng rng(2024);
  for (int trial = 0; trial < 5000; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 60);
    std::vector<int> scores(static_cast<std::size_t>(n));
    bool any = false;
    for (auto& s : scores) {
      s = 1 + static_cast<int>(rng.next_u64() % 5);
      any = any || s != 3;
    }
    if (!any) continue;
    const auto r = responses(scores);
    const double l = trait_percentage(r, Pole::kLeft);
    const double rr = trait_percentage(r, Pole::kRight);
    EXPECT_EQ(l, oracle::point_counter(scores, true));
    EXPECT_EQ(rr, oracle::point_counter(scores, false));
    EXPECT_EQ(l + rr, 100.0);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 100.0);
  }
}

TEST(TraitPercentage, InvariantToNeutralPadding) {
  const auto base = trait_percentage(responses({1, 2, 4}), Pole::kLeft);
  EXPECT_EQ(trait_percentage(responses({3, 1, 3, 2, 4, 3}), Pole::kLeft), base);
}

TEST(ReadResponsesCsv, ParsesWithHeader) {
  std::istringstream in("item_id,score\n0,1\n1,5\n\n2,3\n");
  const auto r = read_responses_csv(in);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1].item_id, 1);
  EXPECT_EQ(r[1].score, 5);
}

TEST(ReadResponsesCsv, ParsesWithoutHeader) {
  std::istringstream in("7,2\n8,4\n");
  const auto r = read_responses_csv(in);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].item_id, 7);
}

TEST(ReadResponsesCsv, RejectsGarbage) {
  std::istringstream in("item_id,score\n0;1\n");
  EXPECT_THROW(read_responses_csv(in), FormatError);
  std::istringstream in2("0,1,extra\n");
  EXPECT_THROW(read_responses_csv(in2), FormatError);
}

}  // namespace
}  // namespace trajfuse
