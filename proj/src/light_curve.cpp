// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/light_curve.hpp"

#include <cmath>
#include <stdexcept>

namespace bumphunt {

void LightCurve::validate() const {
  if (times.size() != values.size()) {
    throw std::invalid_argument("light curve " + source_id + ": times and values differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) {
      throw std::invalid_argument("light curve " + source_id + ": non-finite entry at row " +
                                  std::to_string(i));
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("light curve " + source_id + ": times not strictly increasing at row " +
                                  std::to_string(i));
    }
  }
}

}  // namespace bumphunt
