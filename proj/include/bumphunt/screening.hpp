// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bumphunt/robust_fit.hpp"
#include "bumphunt/wavelet_basis.hpp"

namespace bumphunt {

enum class FdrVariant { bh, by };

std::string_view to_string(FdrVariant variant);
/// Accepts "bh" / "by" (case-insensitive); throws std::invalid_argument otherwise.
FdrVariant parse_fdr_variant(std::string_view text);

struct ScreeningRecord {
  std::string source_id;
  double llr = 0.0;      // clamped at zero
  double raw_llr = 0.0;  // before clamping
  double pvalue = 1.0;
  bool selected = false;
  int df = 0;
};

/// Unclamped 2 (l1 - l0). std::nullopt when either fit is unusable.
std::optional<double> raw_llr_statistic(const RobustFit& null_fit, const RobustFit& alt_fit);

/// max(0, 2 (l1 - l0)); std::nullopt when either fit is unusable.
std::optional<double> llr_statistic(const RobustFit& null_fit, const RobustFit& alt_fit);

/// Number of coefficients constrained by the null hypothesis, M - k_l.
inline int screening_df(const BasisSpec& spec) { return spec.detail_components(); }

/// Upper tail probability of the chi-square distribution with `df` degrees of freedom.
double chi2_pvalue(double llr, int df);

struct FdrSelection {
  std::vector<bool> selected;
  double threshold = 0.0;  // largest selected p-value, 0 when nothing is selected
};

/// Step-up selection at level q. BY divides the BH thresholds i q / m by the
/// harmonic number H_m. Throws std::invalid_argument for q outside (0, 1) or
/// p-values outside [0, 1].
FdrSelection fdr_select(std::span<const double> pvalues, double q, FdrVariant variant);

}  // namespace bumphunt
