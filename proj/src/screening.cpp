// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/screening.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace bumphunt {

std::string_view to_string(FdrVariant variant) { return variant == FdrVariant::bh ? "bh" : "by"; }

FdrVariant parse_fdr_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "bh") return FdrVariant::bh;
  if (lower == "by") return FdrVariant::by;
  throw std::invalid_argument("unknown FDR variant: " + std::string(text));
}

std::optional<double> raw_llr_statistic(const RobustFit& null_fit, const RobustFit& alt_fit) {
  if (!null_fit.usable() || !alt_fit.usable()) return std::nullopt;
  return 2.0 * (alt_fit.loglik - null_fit.loglik);
}

std::optional<double> llr_statistic(const RobustFit& null_fit, const RobustFit& alt_fit) {
  const auto raw = raw_llr_statistic(null_fit, alt_fit);
  if (!raw) return std::nullopt;
  return std::max(0.0, *raw);
}

double chi2_pvalue(double llr, int df) {
  if (df < 1) throw std::invalid_argument("chi2_pvalue: df must be at least 1");
  if (std::isnan(llr)) throw std::invalid_argument("chi2_pvalue: llr is NaN");
  if (llr <= 0.0) return 1.0;
  if (std::isinf(llr)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * llr);
}

FdrSelection fdr_select(std::span<const double> pvalues, double q, FdrVariant variant) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("fdr_select: q must lie in (0, 1)");
  FdrSelection out;
  const std::size_t m = pvalues.size();
  out.selected.assign(m, false);
  if (m == 0) return out;
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("fdr_select: p-values must lie in [0, 1]");
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

  double denom = static_cast<double>(m);
  if (variant == FdrVariant::by) {
    double harmonic = 0.0;
    for (std::size_t j = m; j >= 1; --j) harmonic += 1.0 / static_cast<double>(j);
    denom *= harmonic;
  }

  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t rank = m; rank >= 1; --rank) {
    if (pvalues[order[rank - 1]] <= static_cast<double>(rank) * q / denom) {
      cutoff = rank;
      break;
    }
  }
  if (cutoff == 0) return out;
  out.threshold = pvalues[order[cutoff - 1]];
  for (std::size_t k = 0; k < cutoff; ++k) out.selected[order[k]] = true;
  return out;
}

}  // namespace bumphunt
