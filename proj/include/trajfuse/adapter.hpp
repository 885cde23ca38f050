// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajfuse/error.hpp"

namespace trajfuse {

/// One logical tensor flattened into an adapter's data.
struct TensorShape {
  std::string name;
  std::vector<std::int64_t> dims;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
  bool operator==(const TensorShape&) const = default;
};

using ShapeMeta = std::vector<TensorShape>;

inline std::size_t total_numel(const ShapeMeta& meta) {
  std::size_t n = 0;
  for (const auto& t : meta) n += t.numel();
  return n;
}

/// A flattened effective parameter delta. Construction validates that the
/// data length matches the shape metadata and that every value is finite.
class Adapter {
 public:
  Adapter() = default;
  Adapter(std::vector<double> data, ShapeMeta meta)
      : data_(std::move(data)), meta_(std::move(meta)) {
    for (const auto& t : meta_) {
      if (t.dims.empty())
        throw DimensionError("tensor '" + t.name + "' has no dims");
      for (auto d : t.dims)
        if (d <= 0)
          throw DimensionError("tensor '" + t.name + "' has non-positive dim");
    }
    if (data_.size() != total_numel(meta_))
      throw DimensionError("adapter has " + std::to_string(data_.size()) +
                           " values but shape metadata describes " +
                           std::to_string(total_numel(meta_)));
    for (std::size_t j = 0; j < data_.size(); ++j)
      if (!std::isfinite(data_[j]))
        throw NumericalError("adapter value " + std::to_string(j) +
                             " is not finite");
  }

  /// Single-tensor convenience constructor.
  static Adapter vector(std::vector<double> data, std::string name = "delta") {
    const auto n = static_cast<std::int64_t>(data.size());
    return Adapter(std::move(data), {{std::move(name), {n}}});
  }

  static Adapter zeros(const ShapeMeta& meta) {
    return Adapter(std::vector<double>(total_numel(meta), 0.0), meta);
  }

  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }
  const ShapeMeta& shape_meta() const { return meta_; }
  std::size_t size() const { return data_.size(); }

  bool operator==(const Adapter&) const = default;

 private:
  std::vector<double> data_;
  ShapeMeta meta_;
};

struct Checkpoint {
  std::int64_t step = 0;
  Adapter adapter;
  double trait_percentage = 0.0;

  bool operator==(const Checkpoint&) const = default;
};

struct TraitPair {
  std::string left;
  std::string right;

  bool operator==(const TraitPair&) const = default;
};

inline constexpr int kLibraryFormatVersion = 1;

inline void check_percentage(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 100.0))
    throw DimensionError(what + " must be in [0,100], got " + std::to_string(p));
}

/// The recorded fine-tuning trajectory: one (step, adapter, intensity) per
/// gradient update.
struct TrajectoryLibrary {
  TraitPair trait_pair{"E", "I"};
  std::string target_pole = "E";
  std::vector<Checkpoint> checkpoints;
  int format_version = kLibraryFormatVersion;

  bool operator==(const TrajectoryLibrary&) const = default;

  /// Throws FormatError if an invariant does not hold.
  void validate() const {
    if (target_pole != trait_pair.left && target_pole != trait_pair.right)
      throw FormatError("target_pole '" + target_pole +
                        "' is not one of the trait poles");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      const auto& c = checkpoints[i];
      if (!(c.trait_percentage >= 0.0 && c.trait_percentage <= 100.0))
        throw FormatError("checkpoints[" + std::to_string(i) +
                          "].trait_percentage outside [0,100]");
      if (i > 0) {
        if (c.step <= checkpoints[i - 1].step)
          throw FormatError("checkpoints[" + std::to_string(i) +
                            "].step is not strictly increasing");
        if (c.adapter.shape_meta() != checkpoints[0].adapter.shape_meta())
          throw FormatError("checkpoints[" + std::to_string(i) +
                            "] shape_meta differs from checkpoints[0]");
      }
    }
  }
};

struct BasisEntry {
  Adapter adapter;
  double intensity = 0.0;
  std::int64_t source_step = 0;

  bool operator==(const BasisEntry&) const = default;
};

/// The fusion support: at least two adapters sorted by intensity.
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(std::vector<BasisEntry> entries, TraitPair trait_pair,
           std::string target_pole)
      : entries_(std::move(entries)),
        trait_pair_(std::move(trait_pair)),
        target_pole_(std::move(target_pole)) {
    if (entries_.size() < 2)
      throw DimensionError("basis set needs at least 2 entries, got " +
                           std::to_string(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      check_percentage(entries_[i].intensity, "basis intensity");
      if (entries_[i].adapter.shape_meta() != entries_[0].adapter.shape_meta())
        throw DimensionError("basis entries have differing shape_meta");
      if (i > 0 && entries_[i].intensity < entries_[i - 1].intensity)
        throw FormatError("basis entries must be sorted by intensity");
    }
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<BasisEntry>& entries() const { return entries_; }
  const BasisEntry& operator[](std::size_t i) const { return entries_[i]; }
  const TraitPair& trait_pair() const { return trait_pair_; }
  const std::string& target_pole() const { return target_pole_; }
  const ShapeMeta& shape_meta() const { return entries_.front().adapter.shape_meta(); }

  double min_intensity() const { return entries_.front().intensity; }
  double max_intensity() const { return entries_.back().intensity; }

  std::vector<double> intensities() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.intensity);
    return out;
  }

  bool operator==(const BasisSet&) const = default;

 private:
  std::vector<BasisEntry> entries_;
  TraitPair trait_pair_;
  std::string target_pole_;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Throws InvalidWeights unless `w` is non-negative and sums to 1 within
/// kSimplexTolerance.
inline void check_simplex(std::span<const double> w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0))
      throw InvalidWeights("weight " + std::to_string(i) + " is negative or NaN");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw InvalidWeights("weights sum to " + std::to_string(sum) + ", not 1");
}

/// Convex combination of the basis adapters: out[j] = sum_i w[i] * B_i[j].
inline Adapter fuse_adapters(const BasisSet& basis, std::span<const double> weights) {
  if (weights.size() != basis.size())
    throw DimensionError("got " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(basis.size()) +
                         " basis adapters");
  check_simplex(weights);
  std::vector<double> out(basis[0].adapter.size(), 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double wi = weights[i];
    if (wi == 0.0) continue;
    const auto src = basis[i].adapter.data();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += wi * src[j];
  }
  return Adapter(std::move(out), basis.shape_meta());
}

inline Adapter scale_adapter(const Adapter& a, double c) {
  std::vector<double> out(a.values());
  for (auto& v : out) v *= c;
  return Adapter(std::move(out), a.shape_meta());
}

}  // namespace trajfuse
