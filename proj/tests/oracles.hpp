// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations written independently of the library, used as
// test oracles.

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace trajfuse::oracle {

/// Counts Likert points by enumerating the scale table directly.
inline double point_counter(const std::vector<int>& scores, bool left) {
  static const int kLeftPts[6] = {0, 2, 1, 0, 0, 0};
  static const int kRightPts[6] = {0, 0, 0, 0, 1, 2};
  long l = 0, r = 0;
  for (int s : scores) {
    l += kLeftPts[s];
    r += kRightPts[s];
  }
  return 100.0 * static_cast<double>(left ? l : r) / static_cast<double>(l + r);
}

/// Central finite difference of f at x along every coordinate.
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Closeness at `rel` relative tolerance with an absolute floor.
inline bool close(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

/// Midpoint-rule integral of exp(logpdf) over the 2-simplex on an n x n
/// triangular grid (each cell split in two triangles, evaluated at centroids).
inline double simplex_quadrature(const std::function<double(double, double, double)>& logpdf,
                                 int n) {
  const double h = 1.0 / n;
  const double area = 0.5 * h * h;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      const double x0 = i * h, y0 = j * h;
      {
        const double x = x0 + h / 3.0, y = y0 + h / 3.0;
        total += area * std::exp(logpdf(x, y, 1.0 - x - y));
      }
      if (i + j + 1 < n) {
        const double x = x0 + 2.0 * h / 3.0, y = y0 + 2.0 * h / 3.0;
        total += area * std::exp(logpdf(x, y, 1.0 - x - y));
      }
    }
  }
  // The simplex in (w1, w2) coordinates has area 1/2; density is w.r.t. that measure.
  return total;
}

/// Extrapolates simplex_quadrature for densities with w^(a-1) edge
/// singularities, whose leading error term scales with sqrt(h).
inline double simplex_quadrature_extrapolated(
    const std::function<double(double, double, double)>& logpdf, int n) {
  return 2.0 * simplex_quadrature(logpdf, 4 * n) - simplex_quadrature(logpdf, n);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("trajfuse_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace trajfuse::oracle
