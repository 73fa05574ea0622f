// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace esr {

struct GradCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_coordinate = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

/// Compares an analytic gradient against central differences,
/// |a - cd| / max(|a|, |cd|, 1e-8), and reports the worst coordinate.
/// When `coordinates` is empty every coordinate is probed.
template <typename Scalar>
GradCheckResult finite_difference_check(
    const std::function<Scalar(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& value,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& analytic,
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> point, Scalar step,
    const std::vector<Eigen::Index>& coordinates = {}) {
  GradCheckResult result;
  auto probe = [&](Eigen::Index i) {
    const Scalar saved = point[i];
    point[i] = saved + step;
    const Scalar up = value(point);
    point[i] = saved - step;
    const Scalar down = value(point);
    point[i] = saved;
    const double cd = (static_cast<double>(up) - static_cast<double>(down)) / (2.0 * step);
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(cd), 1e-8});
    const double err = std::abs(a - cd) / denom;
    if (err > result.max_relative_error || result.worst_coordinate < 0) {
      result.max_relative_error = std::max(err, result.max_relative_error);
      result.worst_coordinate = i;
      result.analytic_at_worst = a;
      result.numeric_at_worst = cd;
    }
  };
  if (coordinates.empty()) {
    for (Eigen::Index i = 0; i < point.size(); ++i) probe(i);
  } else {
    for (auto i : coordinates) probe(i);
  }
  return result;
}

}  // namespace esr
