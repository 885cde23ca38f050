// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trajfuse/error.hpp"

namespace trajfuse {

enum class Pole { kLeft, kRight };

struct LikertResponse {
  int item_id = 0;
  int score = 3;
};

struct PoleScores {
  long s_left = 0;
  long s_right = 0;

  PoleScores& operator+=(const PoleScores& o) {
    s_left += o.s_left;
    s_right += o.s_right;
    return *this;
  }
};

/// Points awarded to the (left, right) poles for one answer. Items are keyed
/// so that 1 is strong agreement with the left pole.
inline PoleScores score_item(const LikertResponse& r) {
  switch (r.score) {
    case 1: return {2, 0};
    case 2: return {1, 0};
    case 3: return {0, 0};
    case 4: return {0, 1};
    case 5: return {0, 2};
    default:
      throw InvalidScore("item " + std::to_string(r.item_id) + " has score " +
                         std::to_string(r.score) + ", expected 1..5");
  }
}

inline PoleScores aggregate_scores(std::span<const LikertResponse> responses) {
  PoleScores total;
  for (const auto& r : responses) total += score_item(r);
  return total;
}

/// Share of Likert points that went to `target`, in percent.
inline double trait_percentage(std::span<const LikertResponse> responses, Pole target) {
  if (responses.empty()) throw EmptyInput("no responses to score");
  const PoleScores s = aggregate_scores(responses);
  const long denom = s.s_left + s.s_right;
  if (denom == 0)
    throw NeutralOnly("all " + std::to_string(responses.size()) +
                      " responses are neutral");
  const long num = target == Pole::kLeft ? s.s_left : s.s_right;
  return 100.0 * static_cast<double>(num) / static_cast<double>(denom);
}

/// Reads `item_id,score` rows. A header row is skipped if present.
inline std::vector<LikertResponse> read_responses_csv(std::istream& in) {
  std::vector<LikertResponse> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("item_id", 0) == 0) continue;
    std::istringstream row(line);
    LikertResponse r;
    char comma = 0;
    if (!(row >> r.item_id >> comma >> r.score) || comma != ',' || !(row >> std::ws).eof())
      throw FormatError("responses csv line " + std::to_string(lineno) +
                        ": expected 'item_id,score'");
    out.push_back(r);
  }
  return out;
}

}  // namespace trajfuse
