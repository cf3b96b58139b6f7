// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"

#include "bumphunt/features.hpp"
#include "bumphunt/robust_fit.hpp"
#include "bumphunt/wavelet_basis.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace bumphunt;

namespace {

std::vector<double> standardize(const std::vector<double>& y) {
  long double s = 0, ss = 0;
  for (double v : y) s += v;
  const long double mean = s / y.size();
  for (double v : y) ss += (v - mean) * (v - mean);
  const long double sd = std::sqrt(ss / y.size());
  std::vector<double> z;
  for (double v : y) z.push_back(static_cast<double>((v - mean) / sd));
  return z;
}

// Flat baseline with one spike of the given height.
std::vector<double> spike_series(int n, int at, double height) {
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  y[static_cast<std::size_t>(at)] = height;
  return standardize(y);
}

// Adds a small deterministic ripple to the baseline.
std::vector<double> rippled(std::vector<double> y, double size = 1e-3) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += size * std::sin(1.7 * static_cast<double>(i));
  return y;
}

RobustFit fit_with(Eigen::VectorXd beta) {
  RobustFit f;
  f.beta = std::move(beta);
  f.converged = true;
  return f;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("zero detail coefficients are degenerate") {
  const WaveletBasis basis;
  std::mt19937_64 rng(1);
  const DesignMatrix d = basis.evaluate(testing::random_times(rng, 300, 2048.0));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.cols());
  beta.head(9).setConstant(0.7);
  const EventFeatures f = compute_features(fit_with(beta), d);
  CHECK(f.degenerate);
  CHECK(f.z.empty());
  CHECK(f.cusum == 0.0);
  CHECK(f.dv == 0.0);
  CHECK(detrended_z(fit_with(beta), d).empty());
}

TEST_CASE("z is the standardized detail reconstruction") {
  const WaveletBasis basis;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  const DesignMatrix d = basis.evaluate(testing::random_times(rng, 700, 2048.0));
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd beta(d.cols());
    for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = g(rng);
    const std::vector<double> z = detrended_z(fit_with(beta), d);
    REQUIRE(z.size() == static_cast<std::size_t>(d.rows()));

    std::vector<double> ytilde(static_cast<std::size_t>(d.rows()), 0.0);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      long double s = 0;
      for (Eigen::Index j = 9; j < d.cols(); ++j) s += static_cast<long double>(beta(j)) * d.values(i, j);
      ytilde[static_cast<std::size_t>(i)] = static_cast<double>(s);
    }
    const std::vector<double> expect = standardize(ytilde);
    long double mean = 0, sq = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      CHECK(std::fabs(z[i] - expect[i]) < 1e-12);
      mean += z[i];
      sq += static_cast<long double>(z[i]) * z[i];
    }
    mean /= z.size();
    CHECK(std::fabs(static_cast<double>(mean)) < 1e-10);
    CHECK(std::fabs(static_cast<double>(std::sqrt(sq / z.size() - mean * mean)) - 1.0) < 1e-10);
  }
}

TEST_CASE("cusum examples") {
  std::vector<double> alt;
  for (int i = 0; i < 40; ++i) alt.push_back(i % 2 ? -1.0 : 1.0);
  CHECK(cusum_feature(alt) == 0.0);

  const std::vector<double> z = spike_series(100, 37, 5.0);
  CHECK(std::fabs(cusum_feature(z) - oracle::cusum_brute(z)) <= 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> y(2 + rep * 3);
    for (double& v : y) v = g(rng) * (rep % 3 ? 1.0 : std::exp(g(rng)));
    const std::vector<double> zz = standardize(y);
    const double c = cusum_feature(zz);
    CHECK(c >= 0.0);
    CHECK(std::fabs(c - oracle::cusum_brute(zz)) <= 1e-12);
  }
}

TEST_CASE("median convention") {
  CHECK(median(std::vector<double>{3.0, 1.0, 2.0}) == 2.0);
  CHECK(median(std::vector<double>{4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS(median(std::vector<double>{}));
}

TEST_CASE("directed variation examples") {
  std::vector<double> mirrored;
  for (double a : {0.3, 1.1, 2.0, 0.7}) {
    mirrored.push_back(a);
    mirrored.push_back(-a);
  }
  CHECK(median(mirrored) == 0.0);
  CHECK(directed_variation(mirrored, 0.0) == 0.0);

  // An exactly flat baseline sits on the median and leaves nothing strictly below it.
  bool flat_spike = false;
  const std::vector<double> bare = spike_series(100, 10, 4.0);
  CHECK(directed_variation(bare, median(bare), &flat_spike) == 0.0);
  CHECK(flat_spike);
  const std::vector<double> z = standardize(rippled(bare));
  CHECK(directed_variation(z, median(z)) > 0.0);

  bool degenerate = false;
  const std::vector<double> flat(10, 0.0);
  CHECK(directed_variation(flat, 0.0, &degenerate) == 0.0);
  CHECK(degenerate);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> y(3 + rep * 2);
    for (double& v : y) v = std::exp(g(rng));
    const std::vector<double> zz = standardize(y);
    const double m = median(zz);
    CHECK(m == oracle::median_brute(zz));
    CHECK(std::fabs(directed_variation(zz, m) - oracle::dv_brute(zz, m)) <= 1e-12);
  }
}

TEST_CASE("a single spike concentrates CUSUM more than spread energy") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(50, 1000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = len(rng);
    const int at = static_cast<int>(u(rng) * n);
    const std::vector<double> spike = spike_series(n, at, 1.0 + 10.0 * u(rng));
    std::vector<double> spread(static_cast<std::size_t>(n));
    const double phase = 6.283185307179586 * u(rng);
    for (int i = 0; i < n; ++i) spread[static_cast<std::size_t>(i)] = std::sin(phase + 6.283185307179586 * 7.0 * i / n);
    const std::vector<double> z2 = standardize(spread);
    CHECK(cusum_feature(spike) > cusum_feature(z2));
  }
}

TEST_CASE("sign convention") {
  // Upward bump on a flat baseline.
  std::vector<double> y(400, 0.0);
  for (int i = 180; i < 220; ++i) y[static_cast<std::size_t>(i)] = std::exp(-0.5 * std::pow((i - 200) / 6.0, 2));
  const std::vector<double> z = standardize(rippled(y));
  CHECK(directed_variation(z, median(z)) > 0.0);

  for (int cycles : {5, 6, 9, 17}) {
    std::vector<double> s(1000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(6.283185307179586 * cycles * (i + 0.5) / 1000.0);
    const std::vector<double> zs = standardize(s);
    CHECK(std::fabs(directed_variation(zs, median(zs))) <= 0.2);
  }
}

TEST_CASE("order dependence of the two features") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> y(300);
    for (double& v : y) v = g(rng);
    y[40] += 12.0;
    const std::vector<double> z = standardize(y);
    std::vector<double> shuffled = z;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(directed_variation(shuffled, median(shuffled)) == directed_variation(z, median(z)));
  }
  int changed = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> y(300);
    for (double& v : y) v = 0.3 * g(rng);
    for (int i = 100; i < 110; ++i) y[static_cast<std::size_t>(i)] += 4.0;
    const std::vector<double> z = standardize(y);
    std::vector<double> shuffled = z;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    changed += cusum_feature(shuffled) != cusum_feature(z);
  }
  CHECK(changed == 50);
}

TEST_CASE("features ignore positive scaling and shifts of the reconstruction") {
  const WaveletBasis basis;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const DesignMatrix base = basis.evaluate(testing::random_times(rng, 500, 2048.0));
  DesignMatrix d = base;
  d.values.conservativeResize(Eigen::NoChange, base.cols() + 1);
  d.values.col(base.cols()).setOnes();  // detail-block column carrying the shift
  Eigen::VectorXd beta(d.cols());
  for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = g(rng);
  beta(d.cols() - 1) = 0.0;
  beta(60) += 6.0;
  const EventFeatures a = compute_features(fit_with(beta), d);
  Eigen::VectorXd moved = beta;
  moved.tail(d.cols() - 9) *= 3.7;
  moved(d.cols() - 1) = -11.0;
  const EventFeatures b = compute_features(fit_with(moved), d);
  CHECK(std::fabs(a.cusum - b.cusum) <= 1e-12);
  CHECK(std::fabs(a.dv - b.dv) <= 1e-12);
}

}  // TEST_SUITE
