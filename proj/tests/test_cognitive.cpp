// Copyright 2026 The PAQM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "paqm/cognitive.h"
#include "test_support.h"

using namespace paqm;

namespace {

// O(N*W) reference: two-pass windowed statistics, centered windows shrunk
// at the edges, matching the production window convention.
void oracle_bounds(std::size_t n, std::size_t frames, std::size_t w, std::size_t& lo,
                   std::size_t& hi) {
  const long ideal_lo = static_cast<long>(n) - static_cast<long>((w - 1) / 2);
  lo = ideal_lo > 0 ? static_cast<std::size_t>(ideal_lo) : 0;
  hi = std::min<std::size_t>(frames,
                             static_cast<std::size_t>(std::max(1L, ideal_lo + static_cast<long>(w))));
}

double oracle_window_mean(const Matrix& m, std::size_t n, std::size_t k, std::size_t w) {
  std::size_t lo, hi;
  oracle_bounds(n, m.rows(), w, lo, hi);
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    acc += m(i, k);
  }
  return acc / static_cast<double>(hi - lo);
}

double oracle_window_variance(const Matrix& m, std::size_t n, std::size_t k,
                              std::size_t w) {
  std::size_t lo, hi;
  oracle_bounds(n, m.rows(), w, lo, hi);
  const std::size_t count = hi - lo;
  if (count < 2) {
    return 0.0;
  }
  double mean = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    mean += m(i, k);
  }
  mean /= static_cast<double>(count);
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = m(i, k) - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(count - 1);
}

}  // namespace

TEST_CASE("PS is one when test equals reference") {
  const Matrix e = test::random_matrix(12, 5, 2, 0.0, 100.0);
  const Matrix ps = ps_streaming(e, e);
  for (double v : ps.data()) {
    CHECK(v == 1.0);
  }
}

TEST_CASE("PS single-cell and two-tap filter values") {
  Matrix e_ref(1, 1, 0.0), e_test(1, 1, 3.0);
  CHECK(ps_streaming(e_ref, e_test)(0, 0) == 4.0);

  Matrix r2(2, 1, 0.0);
  Matrix t2(2, 1);
  t2(0, 0) = 0.0;  // PS0 = 1
  t2(1, 0) = 2.0;  // PS0 = 3
  const Matrix ps = ps_streaming(r2, t2);
  CHECK(ps(0, 0) == 1.0);
  CHECK(ps(1, 0) == 2.0);
}

TEST_CASE("PS is positive and monotone in test excitation") {
  const Matrix e_ref = test::random_matrix(20, 6, 41, 0.0, 50.0);
  const Matrix e_lo = test::random_matrix(20, 6, 42, 0.0, 50.0);
  Matrix e_hi = e_lo;
  for (double& v : e_hi.data()) {
    v += 7.5;
  }
  const Matrix ps_lo = ps_streaming(e_ref, e_lo);
  const Matrix ps_hi = ps_streaming(e_ref, e_hi);
  for (std::size_t i = 0; i < ps_lo.data().size(); ++i) {
    CHECK(ps_lo.data()[i] > 0.0);
    CHECK(ps_hi.data()[i] >= ps_lo.data()[i]);
  }
}

TEST_CASE("PDEV vanishes on constant excitation") {
  const Matrix e(30, 8, 42.0);
  const BandSeries out = pdev(e, 0.01, 0.02);
  for (double v : out.band.data()) {
    CHECK(v == 0.0);
  }
  for (double v : out.mean) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("PDEV of an alternating sequence with a 2-frame window") {
  const double a = 5.0, b = 11.0;
  Matrix e(10, 1);
  for (std::size_t n = 0; n < 10; ++n) {
    e(n, 0) = n % 2 == 0 ? a : b;
  }
  // hop 10 ms, 20 ms window -> 2 frames
  const BandSeries out = pdev(e, 0.01, 0.02);
  for (std::size_t n = 0; n + 1 < 10; ++n) {
    CHECK(out.band(n, 0) == doctest::Approx(std::abs(a - b) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("PDEV matches the brute-force windowed-mean oracle") {
  const Matrix e = test::random_matrix(200, 10, 8, 0.0, 1000.0);
  const double hop = 1024.0 / 48000.0;
  const BandSeries out = pdev(e, hop, 0.1);  // ~5-frame window
  const std::size_t w = 5;
  for (std::size_t n = 0; n < e.rows(); ++n) {
    double mean_acc = 0.0;
    for (std::size_t k = 0; k < e.cols(); ++k) {
      const double expected = std::abs(e(n, k) - oracle_window_mean(e, n, k, w));
      CHECK(out.band(n, k) == doctest::Approx(expected).epsilon(1e-12));
      mean_acc += expected;
    }
    CHECK(out.mean[n] == doctest::Approx(mean_acc / e.cols()).epsilon(1e-12));
  }
}

TEST_CASE("beta-var vanishes on constant input") {
  const Matrix beta(40, 6, 1.0);
  const BandSeries out = beta_var(beta, 1024.0 / 48000.0, 0.1);
  for (double v : out.band.data()) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("beta-var two-point window gives sample variance 0.5") {
  Matrix beta(2, 1);
  beta(0, 0) = 0.0;
  beta(1, 0) = 1.0;
  // hop 50 ms, 100 ms window -> 2 frames
  const BandSeries out = beta_var(beta, 0.05, 0.1);
  CHECK(out.band(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("beta-var rejects single-frame input") {
  Matrix beta(1, 3, 1.0);
  CHECK_THROWS_AS(beta_var(beta, 0.02, 0.1), std::invalid_argument);
}

TEST_CASE("beta-var matches the O(N*W) brute-force oracle") {
  const Matrix beta = test::random_matrix(500, 12, 77, 0.1, 4.0);
  const double hop = 1024.0 / 48000.0;
  const BandSeries out = beta_var(beta, hop, 0.1);
  const std::size_t w = 5;
  for (std::size_t n = 0; n < beta.rows(); ++n) {
    for (std::size_t k = 0; k < beta.cols(); ++k) {
      const double expected = oracle_window_variance(beta, n, k, w);
      const double got = out.band(n, k);
      CHECK(std::abs(got - expected) <=
            1e-12 * std::max({std::abs(got), std::abs(expected), 1e-300}));
    }
  }
}

TEST_CASE("beta-var shift invariance and quadratic scale law") {
  const Matrix beta = test::random_matrix(100, 4, 12, 0.5, 2.0);
  Matrix shifted = beta;
  for (double& v : shifted.data()) {
    v += 7.0;
  }
  Matrix scaled = beta;
  for (double& v : scaled.data()) {
    v *= 3.0;
  }
  const double hop = 1024.0 / 48000.0;
  const BandSeries base = beta_var(beta, hop, 0.1);
  const BandSeries shift = beta_var(shifted, hop, 0.1);
  const BandSeries scale = beta_var(scaled, hop, 0.1);
  for (std::size_t i = 0; i < base.band.data().size(); ++i) {
    CHECK(shift.band.data()[i] ==
          doctest::Approx(base.band.data()[i]).epsilon(1e-12));
    CHECK(scale.band.data()[i] ==
          doctest::Approx(9.0 * base.band.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("IMPS neutral state leaves loudness untouched") {
  PartialLoudnessSeries pl;
  pl.values = test::random_matrix(8, 3, 5, 0.0, 1.0);
  const Matrix ps(8, 3, 1.0);
  const std::vector<double> pdev_mean(8, 0.0);
  ImpsConstants consts;
  consts.C = 0.7;
  const Matrix out = imps_legacy(ps, pdev_mean, pl, consts);
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    CHECK(out.data()[i] == doctest::Approx(pl.values.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("IMPS exponent-zero reduction and masking limit") {
  PartialLoudnessSeries pl;
  pl.values = Matrix(2, 2, 1.0);
  const Matrix ps(2, 2, 5.0);
  ImpsConstants consts{0.0, 0.0, 2.0};
  const std::vector<double> pdev_mean(2, 3.0);
  const Matrix out = imps_legacy(ps, pdev_mean, pl, consts);
  for (double v : out.data()) {
    CHECK(v == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // C/(1+C)
  }

  ImpsConstants strong{1.0, 2.0, 1.0};
  const std::vector<double> huge(2, 1e8);
  const Matrix suppressed = imps_legacy(ps, huge, pl, strong);
  for (double v : suppressed.data()) {
    CHECK(v < 1e-12);
  }
}

TEST_CASE("IMPS is monotone in PS and antitone in PDEV") {
  PartialLoudnessSeries pl;
  pl.values = Matrix(1, 1, 2.0);
  ImpsConstants consts{1.5, 1.2, 0.8};
  Matrix ps_lo(1, 1, 1.0), ps_hi(1, 1, 2.0);
  const std::vector<double> pdev_lo(1, 0.5), pdev_hi(1, 1.5);
  const double base = imps_legacy(ps_lo, pdev_lo, pl, consts)(0, 0);
  CHECK(imps_legacy(ps_hi, pdev_lo, pl, consts)(0, 0) > base);
  CHECK(imps_legacy(ps_lo, pdev_hi, pl, consts)(0, 0) < base);
}

TEST_CASE("IMPS rejects non-positive C") {
  PartialLoudnessSeries pl;
  pl.values = Matrix(1, 1, 1.0);
  Matrix ps(1, 1, 1.0);
  ImpsConstants consts;
  consts.C = 0.0;
  CHECK_THROWS_AS(imps_legacy(ps, {0.0}, pl, consts), std::invalid_argument);
}

TEST_CASE("cem summaries pool post-settling frames") {
  const std::size_t frames = 20, bands = 4;
  Matrix e_ref(frames, bands, 10.0);
  Matrix e_test = e_ref;
  Matrix beta(frames, bands, 1.0);
  const CemSeries cem = compute_cem_series(e_ref, e_test, beta, 0.05, 0.02, 0.1, 5,
                                           Pooling::kMean);
  CHECK(cem.ps_summary == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cem.pdev_summary == 0.0);
  CHECK(cem.bvar_summary == 0.0);
  CHECK(cem.pdev.size() == frames);
  CHECK(cem.bvar.size() == frames);
}

TEST_CASE("median pooling") {
  CHECK(pool_values({1.0, 9.0, 2.0}, Pooling::kMedian) == 2.0);
  CHECK(pool_values({1.0, 2.0, 3.0, 10.0}, Pooling::kMedian) == 2.5);
  CHECK(pool_values({1.0, 2.0, 3.0, 10.0}, Pooling::kMean) == 4.0);
}
