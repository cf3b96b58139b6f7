// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bumphunt {

/// One photometric time series. `values` follow the pipeline sign convention:
/// brightening is positive (magnitudes are negated on ingestion).
struct LightCurve {
  std::string source_id;
  std::string field_id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }

  /// Throws std::invalid_argument unless lengths match, every entry is finite
  /// and times are strictly increasing.
  void validate() const;
};

}  // namespace bumphunt
