// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "bumphunt/robust_fit.hpp"
#include "bumphunt/simulator.hpp"
#include "bumphunt/wavelet_basis.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace bumphunt;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

// phi at 0..7 for the least-asymmetric 8-tap filter, computed offline in
// 40-digit arithmetic from the refinement eigenproblem.
constexpr double kSymmletIntegerValues[] = {
    0.0,
    0.0023051743987237415295,
    0.051486627938012946347,
    -0.18304068220933213755,
    1.1954582217884982882,
    -0.073798715217785570437,
    0.0075893733018837968417,
    0.0,
};

}  // namespace

TEST_SUITE("wavelet_basis") {

TEST_CASE("filters are normalized quadrature mirrors") {
  const auto h = symmlet4_filter();
  REQUIRE(h.size() == 8);
  double sum = 0.0, sq = 0.0;
  for (double v : h) {
    sum += v;
    sq += v * v;
  }
  CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sq == doctest::Approx(1.0).epsilon(1e-14));
  for (int shift = 2; shift < 8; shift += 2) {
    double dot = 0.0;
    for (int k = 0; k + shift < 8; ++k) dot += h[k] * h[k + shift];
    CHECK(std::fabs(dot) < 1e-14);
  }
  const auto g = wavelet_filter(h);
  double gs = 0.0;
  for (double v : g) gs += v;
  CHECK(std::fabs(gs) < 1e-14);
  CHECK_THROWS_AS(filter_by_name("db99"), std::invalid_argument);
}

TEST_CASE("Haar scaling function at depth 3 is the unit indicator") {
  const CascadeTables t = cascade_tabulate(haar_filter(), 3);
  REQUIRE(t.scaling.size() == 9);
  for (int i = 0; i < 8; ++i) CHECK(t.scaling[static_cast<std::size_t>(i)] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.scaling[8] == 0.0);
  CHECK(t.scaling_at(0.3) == doctest::Approx(1.0));
  CHECK(t.scaling_at(-0.1) == 0.0);
  CHECK(t.scaling_at(1.5) == 0.0);
}

TEST_CASE("Symmlet-4 partition of unity at depth 10") {
  const CascadeTables t = cascade_tabulate(symmlet4_filter(), 10);
  const int per_unit = 1 << 10;
  double worst = 0.0;
  for (int i = 0; i < per_unit; ++i) {
    const double x = static_cast<double>(i) / per_unit;
    double sum = 0.0;
    for (int k = 0; k < t.support; ++k) sum += t.scaling_at(x + k);
    worst = std::max(worst, std::fabs(sum - 1.0));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("Symmlet-4 values at the integers solve the refinement eigenproblem") {
  const std::vector<double> h = to_vector(symmlet4_filter());
  const std::vector<double> lib = integer_point_values(h);
  const std::vector<double> power = oracle::integer_point_values(h);
  REQUIRE(lib.size() >= 7);
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(lib[k] == doctest::Approx(kSymmletIntegerValues[k]).epsilon(1e-12));
    CHECK(std::fabs(lib[k] - power[k]) < 1e-12);
  }
  const CascadeTables t = cascade_tabulate(h, 10);
  for (int k = 0; k < 7; ++k) CHECK(std::fabs(t.scaling_at(k) - kSymmletIntegerValues[k]) < 1e-12);
}

TEST_CASE("cascade rejects bad filters") {
  const std::vector<double> odd{0.5, 0.5, 0.4142135623730951};
  CHECK_THROWS_AS(cascade_tabulate(odd, 5), std::invalid_argument);
  const std::vector<double> off{0.7, 0.7};
  CHECK_THROWS_AS(cascade_tabulate(off, 5), std::invalid_argument);
}

TEST_CASE("rescale_times examples") {
  const std::vector<double> a{5.0, 10.0};
  CHECK(rescale_times(a, 2048.0) == std::vector<double>{0.0, 2048.0});
  const std::vector<double> b{0.0, 1.0, 2.0};
  CHECK(rescale_times(b, 2048.0) == std::vector<double>{0.0, 1024.0, 2048.0});
  const std::vector<double> one{3.0};
  CHECK_THROWS_AS(rescale_times(one, 2048.0), std::invalid_argument);
  const std::vector<double> dup{1.0, 2.0, 2.0};
  CHECK_THROWS_AS(rescale_times(dup, 2048.0), std::invalid_argument);
}

TEST_CASE("rescale_times on a seven-season survey vector is the affine map") {
  SimulationConfig cfg;
  SimRng rng = curve_rng(17, 0);
  const std::vector<double> t = sample_observation_times(cfg, rng);
  const std::vector<double> r = rescale_times(t, 2048.0);
  REQUIRE(r.size() == t.size());
  const long double lo = t.front(), hi = t.back();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const long double expect = (t[i] - lo) / (hi - lo) * 2048.0L;
    CHECK(std::fabs(static_cast<long double>(r[i]) - expect) < 1e-9L);
    if (i) CHECK(r[i] > r[i - 1]);
  }
}

TEST_CASE("layout of the default split basis") {
  const BasisSpec spec;
  CHECK(spec.columns() == 129);
  CHECK(spec.trend_level() == 3);
  CHECK(spec.finest_detail_level() == 6);
  const WaveletBasis basis(spec);
  CHECK(basis.component_index(1).level == 3);
  CHECK_FALSE(basis.component_index(8).wavelet);
  CHECK(basis.component_index(9).wavelet);
  CHECK(basis.component_index(9).level == 3);
  CHECK(basis.component_index(128).level == 6);
  CHECK(basis.component_index(128).translate == 63);
  BasisSpec bad;
  bad.trend_components = 6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("grid columns are the DWT basis vectors of their coefficients") {
  const WaveletBasis basis;
  const std::vector<double> h = to_vector(symmlet4_filter());
  const int n = basis.grid_size();
  double worst = 0.0;
  for (int c = 1; c <= basis.spec().total_components; ++c) {
    const std::vector<double> coeffs = oracle::dwt(to_vector(basis.grid_column(c)), h, basis.spec().trend_level());
    REQUIRE(static_cast<int>(coeffs.size()) == n);
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::fabs(coeffs[static_cast<std::size_t>(i)] - (i == c - 1 ? 1.0 : 0.0)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("Gram matrix on the full grid is the identity") {
  const WaveletBasis basis;
  std::vector<double> grid(static_cast<std::size_t>(basis.grid_size()));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i);
  const DesignMatrix d = basis.evaluate(grid);
  const Eigen::MatrixXd x = d.values.rightCols(basis.spec().total_components);
  const Eigen::MatrixXd gram = x.transpose() * x;
  const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  CHECK(off <= 1e-6);
}

TEST_CASE("continuous samples equal grid vectors convolved with phi at the integers") {
  const WaveletBasis basis;
  const std::vector<double> h = to_vector(symmlet4_filter());
  const CascadeTables tab = cascade_tabulate(h, 10);
  const std::vector<double> phi = oracle::integer_point_values(h);
  const int n = basis.grid_size();
  const int top = 11;
  struct Case {
    int level, translate;
    bool wavelet;
  };
  for (const Case cs : {Case{3, 2, false}, Case{6, 10, true}, Case{4, 15, true}, Case{3, 7, true}}) {
    const std::vector<double> v = periodized_synthesis_vector(h, n, cs.level, cs.translate, cs.wavelet);
    const double scale = std::ldexp(1.0, cs.level - top);
    double worst = 0.0;
    for (int t = 0; t < n; ++t) {
      double cont = 0.0;
      for (int p = -1; p <= 1; ++p) {
        const double x = scale * (t + p * n) - cs.translate;
        cont += std::sqrt(scale) * (cs.wavelet ? tab.wavelet_at(x) : tab.scaling_at(x));
      }
      double conv = 0.0;
      for (int m = 0; m < n; ++m) {
        const int lag = ((t - m) % n + n) % n;
        if (lag < static_cast<int>(phi.size())) conv += v[static_cast<std::size_t>(m)] * phi[static_cast<std::size_t>(lag)];
      }
      worst = std::max(worst, std::fabs(cont - conv));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("evaluate: constant column, node lookup, wrap and range") {
  const WaveletBasis basis;
  std::mt19937_64 rng(5);
  const std::vector<double> t = testing::random_times(rng, 300, 2048.0);
  const DesignMatrix d = basis.evaluate(t);
  CHECK(d.rows() == 300);
  CHECK(d.cols() == 129);
  CHECK(d.null_columns() == 9);
  CHECK((d.values.col(0).array() == 1.0).all());

  const std::vector<double> zero{0.0};
  const DesignMatrix z = basis.evaluate(zero);
  for (int c = 1; c <= 128; ++c) CHECK(z.values(0, c) == basis.grid_column(c)[0]);

  // 2048 wraps to node 0; 2047.5 interpolates between nodes 2047 and 0
  const std::vector<double> ends{2047.5, 2048.0};
  const DesignMatrix e = basis.evaluate(ends);
  for (int c = 1; c <= 128; ++c) {
    const auto col = basis.grid_column(c);
    CHECK(e.values(1, c) == doctest::Approx(col[0]).epsilon(1e-15));
    CHECK(e.values(0, c) == doctest::Approx(0.5 * (col[2047] + col[0])).epsilon(1e-12));
  }

  const std::vector<double> outside{-1e-9};
  CHECK_THROWS_AS(basis.evaluate(outside), std::invalid_argument);
  const std::vector<double> beyond{2048.5};
  CHECK_THROWS_AS(basis.evaluate(beyond), std::invalid_argument);
}

TEST_CASE("evaluate is deterministic") {
  const WaveletBasis a;
  const WaveletBasis b;
  std::mt19937_64 rng(9);
  const std::vector<double> t = testing::random_times(rng, 500, 2048.0);
  const DesignMatrix x = a.evaluate(t);
  const DesignMatrix y = b.evaluate(t);
  CHECK(x.values.cwiseEqual(y.values).all());
  CHECK(x.values.cwiseEqual(a.evaluate(t).values).all());
}

TEST_CASE("noiseless recovery of in-span signals") {
  const WaveletBasis basis;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t;
  for (int i = 0; i < 4 * 128; ++i) t.push_back((i + u(rng)) * 4.0);
  const DesignMatrix d = basis.evaluate(t);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd truth(129);
    for (Eigen::Index j = 0; j < truth.size(); ++j) truth(j) = g(rng);
    truth.segment(1, 8).array() -= truth.segment(1, 8).mean();
    const Eigen::VectorXd y = d.values * truth;
    const MStepResult fit = m_step(d.values, y, Eigen::VectorXd::Ones(y.size()), 1e-8);
    CHECK((fit.beta - truth).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

}  // TEST_SUITE
