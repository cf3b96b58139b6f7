// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bumphunt {
namespace {

void check_range(const Range& r, const char* name, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw std::invalid_argument(std::string("simulation range ") + name + " is empty");
  }
  if (positive ? !(r.lo > 0.0) : !(r.lo >= 0.0)) {
    throw std::invalid_argument(std::string("simulation range ") + name + " must be " +
                                (positive ? "positive" : "non-negative"));
  }
}

double draw(const Range& r, SimRng& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

int nights_per_season(const SimulationConfig& c) {
  return std::max(1, static_cast<int>(std::floor(c.season_length * (1.0 - c.gap_fraction))));
}

struct Baseline {
  std::vector<double> times;
  std::vector<double> magnitudes;  // trend + noise, no outliers yet
  double sigma = 0.0;
};

Baseline make_baseline(const SimulationConfig& config, SimRng& rng) {
  Baseline b;
  b.times = sample_observation_times(config, rng);
  const std::size_t n = b.times.size();

  const double base = draw(config.base_magnitude, rng);
  std::normal_distribution<double> knot(0.0, 1.0);
  std::vector<double> knots(static_cast<std::size_t>(config.trend_knots));
  for (double& k : knots) k = config.trend_amplitude * knot(rng);
  std::vector<double> trend = cubic_spline_trend(b.times, knots);

  std::vector<double> offsets(static_cast<std::size_t>(config.n_seasons), 0.0);
  if (config.season_offset_sd > 0.0) {
    for (double& o : offsets) o = config.season_offset_sd * knot(rng);
  }

  b.sigma = draw(config.noise_sigma, rng);
  std::student_t_distribution<double> noise(config.noise_nu);
  b.magnitudes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto season = std::clamp(
        static_cast<int>((b.times[i] - config.start_time) / config.season_length), 0, config.n_seasons - 1);
    const double eps = b.sigma > 0.0 ? b.sigma * noise(rng) : 0.0;
    b.magnitudes[i] = base + trend[i] + offsets[static_cast<std::size_t>(season)] + eps;
  }
  return b;
}

SimulatedCurve finish(const SimulationConfig& config, Baseline&& b, TruthRecord truth, SimRng& rng) {
  truth.sigma = b.sigma;
  truth.outlier_positions =
      inject_outliers(b.magnitudes, config.outlier_rate, config.outlier_magnitude, b.sigma, rng);
  SimulatedCurve out;
  out.truth = std::move(truth);
  out.curve.times = std::move(b.times);
  out.curve.values.resize(b.magnitudes.size());
  for (std::size_t i = 0; i < b.magnitudes.size(); ++i) out.curve.values[i] = -b.magnitudes[i];
  return out;
}

TruthRecord blank_truth(CurveClass cls) {
  TruthRecord t;
  t.cls = cls;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.u0 = t.t0 = t.t_e = t.period = t.amplitude = nan;
  return t;
}

}  // namespace

void SimulationConfig::validate() const {
  if (n_obs_min < 2 || n_obs_max < n_obs_min) throw std::invalid_argument("simulation n_obs range is empty");
  if (n_seasons < 1) throw std::invalid_argument("simulation needs at least one season");
  if (!(season_length > 0.0)) throw std::invalid_argument("season_length must be positive");
  if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw std::invalid_argument("gap_fraction must lie in [0, 1)");
  if (!(night_jitter >= 0.0 && night_jitter < 1.0)) throw std::invalid_argument("night_jitter must lie in [0, 1)");
  if (static_cast<long>(n_obs_max) > static_cast<long>(n_seasons) * nights_per_season(*this)) {
    throw std::invalid_argument("n_obs_max exceeds the number of available nights");
  }
  check_range(base_magnitude, "base_magnitude", false);
  check_range(noise_sigma, "noise_sigma", false);
  if (!(noise_nu > 0.0)) throw std::invalid_argument("noise_nu must be positive");
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw std::invalid_argument("outlier_rate must lie in [0, 1]");
  if (!(outlier_magnitude >= 0.0)) throw std::invalid_argument("outlier_magnitude must be non-negative");
  if (trend_knots < 2) throw std::invalid_argument("trend_knots must be at least 2");
  if (!(trend_amplitude >= 0.0) || !(season_offset_sd >= 0.0)) {
    throw std::invalid_argument("trend amplitudes must be non-negative");
  }
  check_range(u0, "u0", true);
  check_range(t_e, "t_e", true);
  check_range(period, "period", true);
  check_range(amplitude, "amplitude", false);
  if (!(second_harmonic_probability >= 0.0 && second_harmonic_probability <= 1.0)) {
    throw std::invalid_argument("second_harmonic_probability must lie in [0, 1]");
  }
  if (n_fields < 1) throw std::invalid_argument("n_fields must be at least 1");
}

std::string_view to_string(CurveClass cls) {
  switch (cls) {
    case CurveClass::null: return "null";
    case CurveClass::event: return "event";
    case CurveClass::periodic: return "periodic";
  }
  return "null";
}

CurveClass parse_curve_class(std::string_view text) {
  if (text == "null") return CurveClass::null;
  if (text == "event") return CurveClass::event;
  if (text == "periodic") return CurveClass::periodic;
  throw std::invalid_argument("unknown curve class: " + std::string(text));
}

SimRng curve_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6275u};
  return SimRng(seq);
}

std::vector<double> sample_observation_times(const SimulationConfig& config, SimRng& rng) {
  const int n = std::uniform_int_distribution<int>(config.n_obs_min, config.n_obs_max)(rng);
  const int per_season = nights_per_season(config);
  const int total = per_season * config.n_seasons;
  if (config.n_obs_min < 1 || n > total) throw std::invalid_argument("n_obs exceeds the number of available nights");

  // n distinct nights without replacement (Floyd's algorithm), then sorted.
  std::vector<int> nights;
  nights.reserve(static_cast<std::size_t>(n));
  std::vector<char> taken(static_cast<std::size_t>(total), 0);
  for (int j = total - n; j < total; ++j) {
    int pick = std::uniform_int_distribution<int>(0, j)(rng);
    if (taken[static_cast<std::size_t>(pick)]) pick = j;
    taken[static_cast<std::size_t>(pick)] = 1;
    nights.push_back(pick);
  }
  std::sort(nights.begin(), nights.end());

  std::uniform_real_distribution<double> jitter(0.0, config.night_jitter);
  std::vector<double> times(nights.size());
  for (std::size_t i = 0; i < nights.size(); ++i) {
    const int season = nights[i] / per_season;
    const int night = nights[i] % per_season;
    const double offset = config.night_jitter > 0.0 ? jitter(rng) : 0.0;
    times[i] = config.start_time + season * config.season_length + night + offset;
  }
  return times;
}

double paczynski_magnification(double t, double u0, double t0, double t_e) {
  const double tau = (t - t0) / t_e;
  const double u2 = u0 * u0 + tau * tau;
  const double u = std::sqrt(u2);
  return (u2 + 2.0) / (u * std::sqrt(u2 + 4.0));
}

double paczynski_magnitude_shift(double t, double u0, double t0, double t_e) {
  return -2.5 * std::log10(paczynski_magnification(t, u0, t0, t_e));
}

std::vector<std::size_t> inject_outliers(std::vector<double>& values, double rate, double magnitude, double sigma,
                                         SimRng& rng, OutlierSign sign) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("inject_outliers: rate must lie in [0, 1]");
  std::vector<std::size_t> positions;
  if (rate == 0.0) return positions;
  std::bernoulli_distribution hit(rate);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!hit(rng)) continue;
    double s = 1.0;
    if (sign == OutlierSign::negative) s = -1.0;
    if (sign == OutlierSign::random) s = coin(rng) ? 1.0 : -1.0;
    values[i] += s * magnitude * sigma;
    positions.push_back(i);
  }
  return positions;
}

std::vector<double> cubic_spline_trend(const std::vector<double>& times, const std::vector<double>& knot_values) {
  const std::size_t k = knot_values.size();
  if (k < 2) throw std::invalid_argument("cubic_spline_trend needs at least two knots");
  std::vector<double> out(times.size(), 0.0);
  if (times.empty()) return out;
  const double first = times.front();
  const double span = std::max(times.back() - first, 1e-12);
  const double h = span / static_cast<double>(k - 1);

  // Second derivatives of the natural spline (tridiagonal solve, zero ends).
  std::vector<double> second(k, 0.0);
  if (k > 2) {
    const std::size_t m = k - 2;
    std::vector<double> diag(m, 4.0), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      rhs[i] = 6.0 * (knot_values[i + 2] - 2.0 * knot_values[i + 1] + knot_values[i]) / (h * h);
    }
    for (std::size_t i = 1; i < m; ++i) {
      const double f = 1.0 / diag[i - 1];
      diag[i] -= f;
      rhs[i] -= f * rhs[i - 1];
    }
    second[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i >= 1; --i) second[i] = (rhs[i - 1] - second[i + 1]) / diag[i - 1];
  }

  for (std::size_t i = 0; i < times.size(); ++i) {
    const double x = (times[i] - first) / h;
    const std::size_t seg = std::min(static_cast<std::size_t>(std::max(x, 0.0)), k - 2);
    const double a = static_cast<double>(seg + 1) - x;  // weight of the left knot
    const double b = 1.0 - a;
    out[i] = a * knot_values[seg] + b * knot_values[seg + 1] +
             ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) * h * h / 6.0;
  }
  return out;
}

SimulatedCurve simulate_null(const SimulationConfig& config, SimRng& rng) {
  Baseline b = make_baseline(config, rng);
  return finish(config, std::move(b), blank_truth(CurveClass::null), rng);
}

SimulatedCurve simulate_event(const SimulationConfig& config, SimRng& rng) {
  Baseline b = make_baseline(config, rng);
  TruthRecord truth = blank_truth(CurveClass::event);
  truth.u0 = draw(config.u0, rng);
  truth.t_e = draw(config.t_e, rng);
  // Peak inside an observed season: pick a season that holds data, then a time
  // within its observed range.
  const double first = b.times.front();
  const double last = b.times.back();
  std::uniform_int_distribution<int> pick_obs(0, static_cast<int>(b.times.size()) - 1);
  const double anchor = b.times[static_cast<std::size_t>(pick_obs(rng))];
  const int season = static_cast<int>((anchor - config.start_time) / config.season_length);
  const double season_start = config.start_time + season * config.season_length;
  const double season_end = season_start + nights_per_season(config);
  truth.t0 = std::clamp(std::uniform_real_distribution<double>(season_start, season_end)(rng), first, last);
  for (std::size_t i = 0; i < b.times.size(); ++i) {
    b.magnitudes[i] += paczynski_magnitude_shift(b.times[i], truth.u0, truth.t0, truth.t_e);
  }
  return finish(config, std::move(b), std::move(truth), rng);
}

SimulatedCurve simulate_periodic(const SimulationConfig& config, SimRng& rng) {
  Baseline b = make_baseline(config, rng);
  TruthRecord truth = blank_truth(CurveClass::periodic);
  truth.period = draw(config.period, rng);
  truth.amplitude = draw(config.amplitude, rng);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const double phi1 = phase(rng);
  const bool harmonic = std::bernoulli_distribution(config.second_harmonic_probability)(rng);
  const double amp2 = harmonic ? truth.amplitude * std::uniform_real_distribution<double>(0.2, 0.5)(rng) : 0.0;
  const double phi2 = phase(rng);
  const double omega = 2.0 * M_PI / truth.period;
  for (std::size_t i = 0; i < b.times.size(); ++i) {
    const double t = b.times[i];
    b.magnitudes[i] += truth.amplitude * std::sin(omega * t + phi1) + amp2 * std::sin(2.0 * omega * t + phi2);
  }
  return finish(config, std::move(b), std::move(truth), rng);
}

SimulatedCurve simulate_one(const SimulationConfig& config, const BatchCounts& counts, int index) {
  if (index < 0 || index >= counts.total()) throw std::out_of_range("simulate_one: index out of range");
  SimRng rng = curve_rng(config.seed, static_cast<std::uint64_t>(index));
  SimulatedCurve sim;
  if (index < counts.null_curves) {
    sim = simulate_null(config, rng);
  } else if (index < counts.null_curves + counts.event_curves) {
    sim = simulate_event(config, rng);
  } else {
    sim = simulate_periodic(config, rng);
  }
  char id[32];
  std::snprintf(id, sizeof id, "sim%07d", index);
  char field[32];
  std::snprintf(field, sizeof field, "F%03d", index % config.n_fields);
  sim.curve.source_id = sim.truth.source_id = id;
  sim.curve.field_id = sim.truth.field_id = field;
  return sim;
}

std::vector<SimulatedCurve> simulate_batch(const SimulationConfig& config, const BatchCounts& counts) {
  config.validate();
  std::vector<SimulatedCurve> out(static_cast<std::size_t>(counts.total()));
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < counts.total(); ++i) out[static_cast<std::size_t>(i)] = simulate_one(config, counts, i);
  return out;
}

}  // namespace bumphunt
