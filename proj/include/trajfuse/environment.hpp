// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>

#include "trajfuse/adapter.hpp"
#include "trajfuse/random.hpp"

namespace trajfuse {

/// A subject whose trait intensity can be measured after applying an
/// adapter. Implementations must be safe for concurrent const calls.
class Environment {
 public:
  virtual ~Environment() = default;

  /// Measured trait percentage in [0,100] for a fused adapter. When `noise`
  /// is null the measurement is noise-free; otherwise observation noise (if
  /// the environment has any) is drawn from it.
  virtual double evaluate(const Adapter& fused, Rng* noise) const = 0;

  virtual std::string descriptor() const = 0;

  /// Intensities reachable by fusing `basis`.
  virtual std::pair<double, double> controllable_range(const BasisSet& basis) const {
    return {basis.min_intensity(), basis.max_intensity()};
  }
};

}  // namespace trajfuse
