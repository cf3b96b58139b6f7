// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bumphunt/light_curve.hpp"

namespace bumphunt {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Synthetic survey settings. Times are in days, amplitudes in magnitudes.
/// Defaults describe a MACHO-like survey: seven observing seasons with
/// seasonal gaps and 800-1000 epochs per source.
struct SimulationConfig {
  int n_obs_min = 800;
  int n_obs_max = 1000;
  int n_seasons = 7;
  double season_length = 365.25;  // days per observing cycle
  double gap_fraction = 0.35;     // unobserved fraction of each cycle
  double start_time = 48800.0;
  double night_jitter = 0.3;  // observation offset within a night, days

  Range base_magnitude{16.0, 20.0};
  Range noise_sigma{0.03, 0.15};
  double noise_nu = 5.0;
  double outlier_rate = 0.01;
  double outlier_magnitude = 10.0;  // in units of the noise scale

  int trend_knots = 4;
  double trend_amplitude = 0.03;   // sd of the spline knot values
  double season_offset_sd = 0.0;   // baseline jumps between seasons

  Range u0{0.05, 1.0};
  Range t_e{20.0, 150.0};
  Range period{60.0, 400.0};
  Range amplitude{0.1, 0.5};
  double second_harmonic_probability = 0.5;

  int n_fields = 50;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument for empty ranges or inconsistent counts.
  void validate() const;
};

enum class CurveClass { null, event, periodic };

std::string_view to_string(CurveClass cls);
CurveClass parse_curve_class(std::string_view text);

/// Generating parameters of one simulated curve. Event and periodic fields are
/// NaN when they do not apply.
struct TruthRecord {
  std::string source_id;
  std::string field_id;
  CurveClass cls = CurveClass::null;
  double sigma = 0.0;
  double u0 = 0.0;
  double t0 = 0.0;
  double t_e = 0.0;
  double period = 0.0;
  double amplitude = 0.0;
  std::vector<std::size_t> outlier_positions;
};

struct SimulatedCurve {
  LightCurve curve;  // pipeline convention: values are negated magnitudes
  TruthRecord truth;
};

using SimRng = std::mt19937_64;

/// Independent generator for curve `index` under `seed`.
SimRng curve_rng(std::uint64_t seed, std::uint64_t index);

std::vector<double> sample_observation_times(const SimulationConfig& config, SimRng& rng);

/// Point-lens magnification A(u) = (u^2 + 2) / (u sqrt(u^2 + 4)).
double paczynski_magnification(double t, double u0, double t0, double t_e);

/// Magnitude change of a point-lens event, -2.5 log10 A.
double paczynski_magnitude_shift(double t, double u0, double t0, double t_e);

enum class OutlierSign { random, positive, negative };

/// Shifts each value independently with probability `rate` by
/// +/- magnitude * sigma. Returns the shifted positions.
std::vector<std::size_t> inject_outliers(std::vector<double>& values, double rate, double magnitude, double sigma,
                                         SimRng& rng, OutlierSign sign = OutlierSign::random);

/// Natural cubic spline through evenly spaced knots over [times.front(), times.back()].
std::vector<double> cubic_spline_trend(const std::vector<double>& times, const std::vector<double>& knot_values);

SimulatedCurve simulate_null(const SimulationConfig& config, SimRng& rng);
SimulatedCurve simulate_event(const SimulationConfig& config, SimRng& rng);
SimulatedCurve simulate_periodic(const SimulationConfig& config, SimRng& rng);

struct BatchCounts {
  int null_curves = 0;
  int event_curves = 0;
  int periodic_curves = 0;

  int total() const { return null_curves + event_curves + periodic_curves; }
};

/// Curve i uses curve_rng(config.seed, i); classes are laid out in the order
/// null, event, periodic. Source ids are "sim" followed by a zero-padded index.
SimulatedCurve simulate_one(const SimulationConfig& config, const BatchCounts& counts, int index);
std::vector<SimulatedCurve> simulate_batch(const SimulationConfig& config, const BatchCounts& counts);

}  // namespace bumphunt
