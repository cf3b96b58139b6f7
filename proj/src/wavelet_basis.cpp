// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/wavelet_basis.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bumphunt {
namespace {

// Least-asymmetric Daubechies-4 synthesis low-pass filter, solved to 20
// significant digits from the orthonormality and vanishing-moment equations.
constexpr std::array<double, 8> kSymmlet4 = {
    0.032223100604051616862,  -0.012603967262030927263, -0.09921954357663354968,
    0.29785779560530537062,   0.80373875180513184383,   0.49761866763277567405,
    -0.029635527646001834145, -0.075765714789503145472,
};

const std::array<double, 2> kHaar = {M_SQRT1_2, M_SQRT1_2};

bool is_power_of_two(int v) { return v > 0 && std::has_single_bit(static_cast<unsigned>(v)); }

int log2_exact(int v) { return std::bit_width(static_cast<unsigned>(v)) - 1; }

void validate_filter(std::span<const double> h) {
  if (h.size() < 2 || h.size() % 2 != 0) {
    throw std::invalid_argument("wavelet filter must have even length >= 2");
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (std::abs(sum - std::sqrt(2.0)) > 1e-12) {
    throw std::invalid_argument("wavelet filter is not normalized: coefficients must sum to sqrt(2)");
  }
}

double interpolate(const std::vector<double>& table, double step, double x) {
  if (!(x >= 0.0)) return 0.0;
  const double pos = x / step;
  const auto last = static_cast<double>(table.size() - 1);
  if (pos > last) return 0.0;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= table.size()) return table.back();
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * table[i] + frac * table[i + 1];
}

}  // namespace

void BasisSpec::validate() const {
  if (!(interval_length >= 2.0) || interval_length != std::floor(interval_length) ||
      interval_length > 1 << 24 || !is_power_of_two(static_cast<int>(interval_length))) {
    throw std::invalid_argument("interval_length must be a power of two");
  }
  if (trend_components < 1 || !is_power_of_two(trend_components)) {
    throw std::invalid_argument("trend_components must be a positive power of two");
  }
  if (trend_components >= total_components) {
    throw std::invalid_argument("trend_components must be smaller than total_components");
  }
  if (!is_power_of_two(total_components)) {
    throw std::invalid_argument("total_components must be a power of two");
  }
  if (total_components > grid_size()) {
    throw std::invalid_argument("total_components exceeds the grid resolution of the interval");
  }
  if (cascade_depth < 1 || cascade_depth > 20) {
    throw std::invalid_argument("cascade_depth must lie in [1, 20]");
  }
  (void)filter_by_name(filter_name);
}

int BasisSpec::trend_level() const { return log2_exact(trend_components); }

int BasisSpec::finest_detail_level() const { return log2_exact(total_components) - 1; }

std::span<const double> symmlet4_filter() { return kSymmlet4; }

std::span<const double> haar_filter() { return kHaar; }

std::span<const double> filter_by_name(std::string_view name) {
  if (name == "symmlet4" || name == "sym4" || name == "la8") return kSymmlet4;
  if (name == "haar") return kHaar;
  throw std::invalid_argument("unknown wavelet filter: " + std::string(name));
}

std::vector<double> wavelet_filter(std::span<const double> lowpass) {
  const std::size_t len = lowpass.size();
  std::vector<double> g(len);
  for (std::size_t k = 0; k < len; ++k) {
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[len - 1 - k];
  }
  return g;
}

std::vector<double> integer_point_values(std::span<const double> lowpass) {
  validate_filter(lowpass);
  // phi(k) = sqrt(2) sum_j h_j phi(2k - j) for k = 0..L-2; phi(L-1) = 0 by the
  // half-open support convention.
  const int n = static_cast<int>(lowpass.size()) - 1;
  const int taps = static_cast<int>(lowpass.size());
  Eigen::MatrixXd system = -Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    for (int m = 0; m < n; ++m) {
      const int j = 2 * k - m;
      if (j >= 0 && j < taps) system(k, m) += std::sqrt(2.0) * lowpass[j];
    }
  }
  // The eigenvalue-1 system is singular; swap one equation for the normalization.
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd v = system.fullPivLu().solve(rhs);
  return {v.data(), v.data() + n};
}

double CascadeTables::step() const { return std::ldexp(1.0, -depth); }

double CascadeTables::scaling_at(double x) const { return interpolate(scaling, step(), x); }

double CascadeTables::wavelet_at(double x) const { return interpolate(wavelet, step(), x); }

CascadeTables cascade_tabulate(std::span<const double> lowpass, int depth) {
  validate_filter(lowpass);
  if (depth < 0 || depth > 24) throw std::invalid_argument("cascade depth must lie in [0, 24]");

  const int taps = static_cast<int>(lowpass.size());
  const int support = taps - 1;
  const double root2 = std::sqrt(2.0);

  std::vector<double> current = integer_point_values(lowpass);
  current.push_back(0.0);

  // Each pass halves the spacing: even nodes are inherited, odd nodes come
  // from the dilation equation evaluated on the previous grid.
  for (int level = 1; level <= depth; ++level) {
    const std::size_t count = (static_cast<std::size_t>(support) << level) + 1;
    const std::size_t half = std::size_t{1} << (level - 1);
    std::vector<double> next(count, 0.0);
    for (std::size_t m = 0; m < count; ++m) {
      if (m % 2 == 0) {
        next[m] = current[m / 2];
        continue;
      }
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) {
        const auto offset = static_cast<std::size_t>(k) * half;
        if (offset > m) break;
        const std::size_t idx = m - offset;
        if (idx < current.size()) acc += lowpass[k] * current[idx];
      }
      next[m] = root2 * acc;
    }
    current = std::move(next);
  }

  CascadeTables tables;
  tables.depth = depth;
  tables.support = support;
  tables.scaling = std::move(current);

  // psi(x) = sqrt(2) sum_k g_k phi(2x - k); 2x - k stays on the same grid.
  const std::vector<double> g = wavelet_filter(lowpass);
  const std::size_t count = tables.scaling.size();
  const std::size_t unit = std::size_t{1} << depth;
  tables.wavelet.assign(count, 0.0);
  for (std::size_t m = 0; m < count; ++m) {
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const std::size_t offset = static_cast<std::size_t>(k) * unit;
      if (offset > 2 * m) break;
      const std::size_t idx = 2 * m - offset;
      if (idx < count) acc += g[k] * tables.scaling[idx];
    }
    tables.wavelet[m] = root2 * acc;
  }
  return tables;
}

std::vector<double> rescale_times(std::span<const double> times, double interval_length) {
  if (times.size() < 2) throw std::invalid_argument("rescale_times needs at least two times");
  if (!(interval_length > 0.0)) throw std::invalid_argument("interval_length must be positive");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] == times[i - 1]) throw std::invalid_argument("rescale_times: duplicate observation time");
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("rescale_times: times not increasing");
  }
  const double first = times.front();
  const double span = times.back() - first;
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i] = std::clamp((times[i] - first) / span * interval_length, 0.0, interval_length);
  }
  out.back() = interval_length;
  return out;
}

std::vector<double> periodized_synthesis_vector(std::span<const double> lowpass, int grid_size,
                                                int level, int translate, bool wavelet) {
  if (!is_power_of_two(grid_size)) throw std::invalid_argument("grid size must be a power of two");
  const int top = log2_exact(grid_size);
  if (level < 0 || level >= top) throw std::invalid_argument("synthesis level out of range");
  const int width = 1 << level;
  if (translate < 0 || translate >= width) throw std::invalid_argument("translate out of range");

  const std::vector<double> highpass = wavelet_filter(lowpass);
  std::vector<double> approx(static_cast<std::size_t>(width), 0.0);
  std::vector<double> detail(static_cast<std::size_t>(width), 0.0);
  (wavelet ? detail : approx)[static_cast<std::size_t>(translate)] = 1.0;

  for (int len = width; len < grid_size; len *= 2) {
    const int next_len = 2 * len;
    std::vector<double> next(static_cast<std::size_t>(next_len), 0.0);
    for (int k = 0; k < len; ++k) {
      const double a = approx[static_cast<std::size_t>(k)];
      const double d = detail[static_cast<std::size_t>(k)];
      if (a == 0.0 && d == 0.0) continue;
      for (std::size_t l = 0; l < lowpass.size(); ++l) {
        const auto idx = static_cast<std::size_t>((2 * k + static_cast<int>(l)) % next_len);
        next[idx] += lowpass[l] * a + highpass[l] * d;
      }
    }
    approx = std::move(next);
    detail.assign(static_cast<std::size_t>(next_len), 0.0);
  }
  return approx;
}

WaveletBasis::WaveletBasis(BasisSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  grid_ = spec_.grid_size();
  const std::span<const double> h = filter_by_name(spec_.filter_name);
  const int m = spec_.total_components;
  tables_.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(grid_));
  for (int c = 1; c <= m; ++c) {
    const ComponentIndex idx = component_index(c);
    std::vector<double> v = periodized_synthesis_vector(h, grid_, idx.level, idx.translate, idx.wavelet);
    std::copy(v.begin(), v.end(), tables_.begin() + static_cast<std::ptrdiff_t>(c - 1) * grid_);
  }
}

WaveletBasis::ComponentIndex WaveletBasis::component_index(int component) const {
  if (component < 1 || component > spec_.total_components) {
    throw std::out_of_range("basis component out of range");
  }
  const int j0 = spec_.trend_level();
  if (component <= spec_.trend_components) return {j0, component - 1, false};
  int offset = component - spec_.trend_components - 1;
  for (int level = j0;; ++level) {
    const int width = 1 << level;
    if (offset < width) return {level, offset, true};
    offset -= width;
  }
}

std::span<const double> WaveletBasis::grid_column(int component) const {
  if (component < 1 || component > spec_.total_components) {
    throw std::out_of_range("basis component out of range");
  }
  return {tables_.data() + static_cast<std::size_t>(component - 1) * static_cast<std::size_t>(grid_),
          static_cast<std::size_t>(grid_)};
}

DesignMatrix WaveletBasis::evaluate(std::span<const double> rescaled_times) const {
  const auto n = static_cast<Eigen::Index>(rescaled_times.size());
  const int m = spec_.total_components;
  const double length = spec_.interval_length;
  const double to_grid = static_cast<double>(grid_) / length;

  DesignMatrix design;
  design.trend_components = spec_.trend_components;
  design.rescaled_times.assign(rescaled_times.begin(), rescaled_times.end());
  design.values.resize(n, 1 + m);
  design.values.col(0).setOnes();

  for (Eigen::Index r = 0; r < n; ++r) {
    const double t = rescaled_times[static_cast<std::size_t>(r)];
    if (!(t >= 0.0 && t <= length)) {
      throw std::invalid_argument("evaluate_basis: time " + std::to_string(t) + " outside the interval");
    }
    const double pos = t * to_grid;
    auto lo = static_cast<int>(pos);
    const double frac = pos - lo;
    lo %= grid_;
    const int hi = (lo + 1) % grid_;
    for (int c = 1; c <= m; ++c) {
      const double* row = tables_.data() + static_cast<std::size_t>(c - 1) * static_cast<std::size_t>(grid_);
      design.values(r, c) = frac == 0.0 ? row[lo] : (1.0 - frac) * row[lo] + frac * row[hi];
    }
  }
  return design;
}

}  // namespace bumphunt
