// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <span>
#include <vector>

#include "bumphunt/robust_fit.hpp"
#include "bumphunt/wavelet_basis.hpp"

namespace bumphunt {

struct EventFeatures {
  double cusum = 0.0;
  double dv = 0.0;
  std::vector<double> z;  // empty when degenerate
  double z_med = 0.0;
  bool degenerate = false;
};

/// Detail-block reconstruction sum_{j > k_l} beta_j phi_j(t) at the
/// observation times, standardized to mean 0 and (population) standard
/// deviation 1. Returns an empty vector when the reconstruction is constant.
std::vector<double> detrended_z(const RobustFit& alt_fit, const DesignMatrix& design);

/// log(1 + (max S - min S) / sqrt(n)) with S the partial sums of z^2 - 1 in
/// time order, the empty prefix S = 0 included.
double cusum_feature(std::span<const double> z);

/// Median with the midpoint convention for even lengths.
double median(std::span<const double> values);

/// Mean of z^2 strictly above the median minus mean of z^2 strictly below it.
/// Sets *degenerate (when given) and returns 0 if either side is empty.
double directed_variation(std::span<const double> z, double z_med, bool* degenerate = nullptr);

/// All features of one alternative fit; degenerate reconstructions give
/// cusum = dv = 0 with the flag set.
EventFeatures compute_features(const RobustFit& alt_fit, const DesignMatrix& design);

}  // namespace bumphunt
