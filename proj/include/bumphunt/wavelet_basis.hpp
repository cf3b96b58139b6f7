// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bumphunt {

/// Layout of the split basis. Component 0 is the constant; components
/// 1..trend_components are the periodized scaling functions at the level with
/// exactly `trend_components` translates; the remaining detail components are
/// periodized wavelets from that level up to the level holding M/2 translates.
/// For the defaults this is 8 scaling functions at level 3 and wavelets at
/// levels 3..6 (8 + 16 + 32 + 64 = 120).
struct BasisSpec {
  double interval_length = 2048.0;
  int total_components = 128;  // M
  int trend_components = 8;    // k_l
  std::string filter_name = "symmlet4";
  int cascade_depth = 10;  // depth of the continuous mother-function tables

  /// Throws std::invalid_argument when the counts do not fit the dyadic layout.
  void validate() const;

  int grid_size() const { return static_cast<int>(interval_length); }
  int detail_components() const { return total_components - trend_components; }
  int trend_level() const;
  int finest_detail_level() const;
  /// Number of design columns: the constant plus M.
  int columns() const { return 1 + total_components; }
};

/// Synthesis low-pass filter of the least-asymmetric Daubechies wavelet with
/// four vanishing moments (8 taps, sums to sqrt(2)).
std::span<const double> symmlet4_filter();
std::span<const double> haar_filter();
std::span<const double> filter_by_name(std::string_view name);

/// Quadrature-mirror high-pass filter g[k] = (-1)^k h[L-1-k].
std::vector<double> wavelet_filter(std::span<const double> lowpass);

/// Values of the scaling function at the integer abscissae 0..L-2 (the value
/// at L-1 is zero): the eigenvector of the refinement matrix for eigenvalue 1,
/// normalized to sum 1.
std::vector<double> integer_point_values(std::span<const double> lowpass);

/// Mother scaling function and wavelet tabulated on the dyadic grid
/// x = i * 2^-depth, i = 0 .. (L-1) * 2^depth, exact at the grid points.
struct CascadeTables {
  int depth = 0;
  int support = 0;  // filter length - 1
  std::vector<double> scaling;
  std::vector<double> wavelet;

  double step() const;
  /// Linear interpolation between grid points; zero outside [0, support].
  double scaling_at(double x) const;
  double wavelet_at(double x) const;
};

/// Throws std::invalid_argument for odd/short filters or when the filter does
/// not sum to sqrt(2) within 1e-12.
CascadeTables cascade_tabulate(std::span<const double> lowpass, int depth);

/// Affine map of strictly increasing times onto [0, interval_length].
std::vector<double> rescale_times(std::span<const double> times, double interval_length);

/// Design matrix: one row per observation, columns constant | trend | detail.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<double> rescaled_times;
  int trend_components = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// Columns used by the trend-only (null) model.
  Eigen::Index null_columns() const { return 1 + trend_components; }
};

/// Periodized discrete basis on the interval grid, built once and shared
/// read-only. Column c (1..M) holds the orthonormal periodized DWT synthesis
/// vector of its coefficient, i.e. functions orthonormal in L2 over the
/// rescaled interval sampled at t = 0..N-1; between grid nodes values are
/// interpolated linearly, wrapping at the interval boundary.
class WaveletBasis {
 public:
  explicit WaveletBasis(BasisSpec spec = {});

  const BasisSpec& spec() const { return spec_; }
  int grid_size() const { return grid_; }

  /// Tabulated values of component c (1..M) at the grid nodes.
  std::span<const double> grid_column(int component) const;

  /// (level, translate, is_wavelet) of component c (1..M).
  struct ComponentIndex {
    int level;
    int translate;
    bool wavelet;
  };
  ComponentIndex component_index(int component) const;

  /// Throws std::invalid_argument when a time lies outside [0, interval_length].
  DesignMatrix evaluate(std::span<const double> rescaled_times) const;

 private:
  BasisSpec spec_;
  int grid_ = 0;
  std::vector<double> tables_;  // M rows of grid_ values
};

/// Periodized orthonormal synthesis vector of length grid_size for one
/// coefficient: a unit impulse at (level, translate) pushed through the
/// synthesis filter bank up to level log2(grid_size).
std::vector<double> periodized_synthesis_vector(std::span<const double> lowpass, int grid_size,
                                                int level, int translate, bool wavelet);

inline DesignMatrix evaluate_basis(const WaveletBasis& basis, std::span<const double> rescaled_times) {
  return basis.evaluate(rescaled_times);
}

}  // namespace bumphunt
