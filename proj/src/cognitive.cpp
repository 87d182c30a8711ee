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

#include "paqm/cognitive.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paqm {

namespace {

std::size_t window_frames(double window_s, double hop, std::size_t minimum) {
  if (hop <= 0.0) {
    throw std::invalid_argument("window_frames: hop duration must be positive");
  }
  const auto rounded = static_cast<std::size_t>(std::llround(window_s / hop));
  return std::max(minimum, rounded);
}

// Centered window [lo, hi) of nominal length w; edge windows keep their
// center and shrink to the available frames.
void window_bounds(std::size_t n, std::size_t n_frames, std::size_t w,
                   std::size_t& lo, std::size_t& hi) {
  const auto ideal_lo = static_cast<long>(n) - static_cast<long>((w - 1) / 2);
  lo = ideal_lo > 0 ? static_cast<std::size_t>(ideal_lo) : 0;
  const long ideal_hi = ideal_lo + static_cast<long>(w);
  hi = std::min<std::size_t>(n_frames, static_cast<std::size_t>(std::max(1L, ideal_hi)));
}

}  // namespace

Matrix ps_streaming(const Matrix& e_ref, const Matrix& e_test) {
  require_same_shape(e_ref, e_test, "ps_streaming");
  if (e_ref.rows() == 0) {
    throw std::invalid_argument("ps_streaming: empty input");
  }
  Matrix ps(e_ref.rows(), e_ref.cols());
  std::vector<double> prev(e_ref.cols());
  for (std::size_t n = 0; n < e_ref.rows(); ++n) {
    for (std::size_t k = 0; k < e_ref.cols(); ++k) {
      const double ps0 = (e_test(n, k) + 1.0) / (e_ref(n, k) + 1.0);
      ps(n, k) = n == 0 ? ps0 : 0.5 * ps0 + 0.5 * prev[k];
      prev[k] = ps0;
    }
  }
  return ps;
}

BandSeries pdev(const Matrix& e_ref, double frame_hop_duration, double window_s) {
  const std::size_t n_frames = e_ref.rows();
  const std::size_t bands = e_ref.cols();
  if (n_frames == 0) {
    throw std::invalid_argument("pdev: empty input");
  }
  const std::size_t w = window_frames(window_s, frame_hop_duration, 1);

  BandSeries out;
  out.band = Matrix(n_frames, bands);
  out.mean.assign(n_frames, 0.0);

  // Prefix sums in extended precision keep the windowed means stable over
  // long sequences.
  std::vector<long double> prefix(n_frames + 1);
  for (std::size_t k = 0; k < bands; ++k) {
    prefix[0] = 0.0L;
    for (std::size_t n = 0; n < n_frames; ++n) {
      prefix[n + 1] = prefix[n] + static_cast<long double>(e_ref(n, k));
    }
    for (std::size_t n = 0; n < n_frames; ++n) {
      std::size_t lo, hi;
      window_bounds(n, n_frames, w, lo, hi);
      const long double mean = (prefix[hi] - prefix[lo]) / (hi - lo);
      out.band(n, k) = std::abs(e_ref(n, k) - static_cast<double>(mean));
    }
  }
  for (std::size_t n = 0; n < n_frames; ++n) {
    double acc = 0.0;
    for (double v : out.band.row(n)) {
      acc += v;
    }
    out.mean[n] = acc / static_cast<double>(bands);
  }
  return out;
}

BandSeries beta_var(const Matrix& beta, double frame_hop_duration, double window_s) {
  const std::size_t n_frames = beta.rows();
  const std::size_t bands = beta.cols();
  if (n_frames < 2) {
    throw std::invalid_argument("beta_var: need at least 2 frames");
  }
  const std::size_t w = window_frames(window_s, frame_hop_duration, 2);

  BandSeries out;
  out.band = Matrix(n_frames, bands);
  out.mean.assign(n_frames, 0.0);

  std::vector<long double> prefix1(n_frames + 1);
  std::vector<long double> prefix2(n_frames + 1);
  for (std::size_t k = 0; k < bands; ++k) {
    prefix1[0] = 0.0L;
    prefix2[0] = 0.0L;
    for (std::size_t n = 0; n < n_frames; ++n) {
      const auto v = static_cast<long double>(beta(n, k));
      prefix1[n + 1] = prefix1[n] + v;
      prefix2[n + 1] = prefix2[n] + v * v;
    }
    for (std::size_t n = 0; n < n_frames; ++n) {
      std::size_t lo, hi;
      window_bounds(n, n_frames, w, lo, hi);
      const auto m = static_cast<long double>(hi - lo);
      if (m < 2) {
        out.band(n, k) = 0.0;
        continue;
      }
      const long double s1 = prefix1[hi] - prefix1[lo];
      const long double s2 = prefix2[hi] - prefix2[lo];
      const long double variance = (s2 - s1 * s1 / m) / (m - 1);
      out.band(n, k) = std::max(0.0, static_cast<double>(variance));
    }
  }
  for (std::size_t n = 0; n < n_frames; ++n) {
    double acc = 0.0;
    for (double v : out.band.row(n)) {
      acc += v;
    }
    out.mean[n] = acc / static_cast<double>(bands);
  }
  return out;
}

Matrix imps_legacy(const Matrix& ps, const std::vector<double>& pdev_mean,
                   const PartialLoudnessSeries& noise_loud,
                   const ImpsConstants& consts) {
  if (consts.C <= 0.0) {
    throw std::invalid_argument("imps_legacy: C must be positive");
  }
  require_same_shape(ps, noise_loud.values, "imps_legacy");
  if (pdev_mean.size() != ps.rows()) {
    throw std::invalid_argument("imps_legacy: PDEV length mismatch");
  }
  Matrix out(ps.rows(), ps.cols());
  for (std::size_t n = 0; n < ps.rows(); ++n) {
    const double denom = std::pow(pdev_mean[n], consts.b) + consts.C;
    for (std::size_t k = 0; k < ps.cols(); ++k) {
      out(n, k) =
          consts.C * std::pow(ps(n, k), consts.a) * noise_loud.values(n, k) / denom;
    }
  }
  return out;
}

double pool_values(std::vector<double> values, Pooling pooling) {
  if (values.empty()) {
    return 0.0;
  }
  if (pooling == Pooling::kMedian) {
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    if (values.size() % 2 == 1) {
      return values[mid];
    }
    const double hi = values[mid];
    const double lo = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lo + hi);
  }
  double acc = 0.0;
  for (double v : values) {
    acc += v;
  }
  return acc / static_cast<double>(values.size());
}

CemSeries compute_cem_series(const Matrix& e_ref, const Matrix& e_test,
                             const Matrix& beta, double frame_hop_duration,
                             double pdev_window_s, double bvar_window_s,
                             std::size_t settle_frames, Pooling pooling) {
  CemSeries out;
  out.ps = ps_streaming(e_ref, e_test);
  auto pdev_series = pdev(e_ref, frame_hop_duration, pdev_window_s);
  out.pdev_band = std::move(pdev_series.band);
  out.pdev = std::move(pdev_series.mean);
  auto bvar_series = beta_var(beta, frame_hop_duration, bvar_window_s);
  out.bvar_band = std::move(bvar_series.band);
  out.bvar = std::move(bvar_series.mean);

  const std::size_t n_frames = out.ps.rows();
  const std::size_t start = std::min(settle_frames, n_frames - 1);
  std::vector<double> ps_frame;
  std::vector<double> pdev_frame;
  std::vector<double> bvar_frame;
  for (std::size_t n = start; n < n_frames; ++n) {
    double acc = 0.0;
    for (double v : out.ps.row(n)) {
      acc += v;
    }
    ps_frame.push_back(acc / static_cast<double>(out.ps.cols()));
    pdev_frame.push_back(out.pdev[n]);
    bvar_frame.push_back(out.bvar[n]);
  }
  out.ps_summary = pool_values(std::move(ps_frame), pooling);
  out.pdev_summary = pool_values(std::move(pdev_frame), pooling);
  out.bvar_summary = pool_values(std::move(bvar_frame), pooling);
  return out;
}

}  // namespace paqm
