// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bumphunt {

std::vector<double> detrended_z(const RobustFit& alt_fit, const DesignMatrix& design) {
  const Eigen::Index detail_start = design.null_columns();
  const Eigen::Index detail = design.cols() - detail_start;
  if (alt_fit.beta.size() != design.cols()) {
    throw std::invalid_argument("detrended_z: fit does not match the full design");
  }
  const Eigen::VectorXd ytilde =
      design.values.rightCols(detail) * alt_fit.beta.tail(detail);
  const auto n = static_cast<double>(ytilde.size());
  const double mean = ytilde.sum() / n;
  const Eigen::ArrayXd centered = ytilde.array() - mean;
  const double sd = std::sqrt(centered.square().sum() / n);
  if (!(sd > 0.0) || !std::isfinite(sd)) return {};
  // Guard against a reconstruction that is constant up to rounding.
  if (sd <= 1e-14 * std::max(1.0, ytilde.cwiseAbs().maxCoeff())) return {};
  std::vector<double> z(static_cast<std::size_t>(ytilde.size()));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = centered(static_cast<Eigen::Index>(i)) / sd;
  return z;
}

double cusum_feature(std::span<const double> z) {
  double s = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (double v : z) {
    s += v * v - 1.0;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return std::log1p((hi - lo) / std::sqrt(static_cast<double>(z.size())));
}

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty series");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double directed_variation(std::span<const double> z, double z_med, bool* degenerate) {
  std::vector<double> above;
  std::vector<double> below;
  for (double v : z) {
    if (v > z_med) {
      above.push_back(v * v);
    } else if (v < z_med) {
      below.push_back(v * v);
    }
  }
  const bool empty = above.empty() || below.empty();
  if (degenerate) *degenerate = empty;
  if (empty) return 0.0;
  const auto mean = [](std::vector<double>& sq) {
    std::sort(sq.begin(), sq.end());
    double sum = 0.0;
    for (double x : sq) sum += x;
    return sum / static_cast<double>(sq.size());
  };
  return mean(above) - mean(below);
}

EventFeatures compute_features(const RobustFit& alt_fit, const DesignMatrix& design) {
  EventFeatures f;
  f.z = detrended_z(alt_fit, design);
  if (f.z.empty()) {
    f.degenerate = true;
    return f;
  }
  f.z_med = median(f.z);
  f.cusum = cusum_feature(f.z);
  bool dv_degenerate = false;
  f.dv = directed_variation(f.z, f.z_med, &dv_degenerate);
  f.degenerate = dv_degenerate;
  return f;
}

}  // namespace bumphunt
