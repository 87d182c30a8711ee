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

#include "paqm/distortion.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "paqm/errors.h"
#include "paqm/fft.h"

namespace paqm {

namespace {
constexpr double kExponentClamp = 700.0;  // keeps exp() positive finite
constexpr double kLogRatioFloor = 1e-12;  // -120 dB floor for the NMR log
}  // namespace

Matrix beta_term(const Matrix& e_ref, const Matrix& e_test, double alpha,
                 std::span<const double> noise_floor) {
  require_same_shape(e_ref, e_test, "beta_term");
  if (!noise_floor.empty() && noise_floor.size() != e_ref.cols()) {
    throw std::invalid_argument("beta_term: noise floor size must match band count");
  }
  Matrix beta(e_ref.rows(), e_ref.cols());
  for (std::size_t n = 0; n < e_ref.rows(); ++n) {
    for (std::size_t k = 0; k < e_ref.cols(); ++k) {
      const double floor_k = noise_floor.empty() ? 1e-12 : noise_floor[k];
      const double denom = std::max(e_ref(n, k), floor_k);
      const double exponent = std::clamp(
          -alpha * (e_test(n, k) - e_ref(n, k)) / denom, -kExponentClamp, kExponentClamp);
      beta(n, k) = std::exp(exponent);
    }
  }
  return beta;
}

PartialLoudnessSeries partial_loudness(const Matrix& e_ref, const Matrix& e_test,
                                       const Matrix& s_ref, const Matrix& s_test,
                                       const LoudnessConstants& consts) {
  require_same_shape(e_ref, e_test, "partial_loudness");
  require_same_shape(e_ref, s_ref, "partial_loudness");
  require_same_shape(e_ref, s_test, "partial_loudness");
  const std::size_t bands = e_ref.cols();
  if (consts.threshold_energy.size() != bands && consts.threshold_energy.size() != 1) {
    throw std::invalid_argument("partial_loudness: threshold_energy size mismatch");
  }

  PartialLoudnessSeries out;
  out.beta = beta_term(e_ref, e_test, consts.alpha,
                       consts.threshold_energy.size() == bands
                           ? std::span<const double>(consts.threshold_energy)
                           : std::span<const double>());
  out.values = Matrix(e_ref.rows(), bands);
  for (std::size_t n = 0; n < e_ref.rows(); ++n) {
    for (std::size_t k = 0; k < bands; ++k) {
      const double st = s_test(n, k);
      const double sr = s_ref(n, k);
      if (st <= 0.0 || sr <= 0.0) {
        throw std::invalid_argument("partial_loudness: non-positive masking weight");
      }
      const double e_th =
          consts.threshold_energy.size() == bands ? consts.threshold_energy[k]
                                                  : consts.threshold_energy[0];
      const double excess = std::max(st * e_test(n, k) - sr * e_ref(n, k), 0.0);
      const double denom = e_th + sr * e_ref(n, k) * out.beta(n, k);
      const double bracket = std::pow(1.0 + excess / denom, consts.gamma) - 1.0;
      const double level_term =
          std::pow((1.0 / st) * (e_th / consts.full_scale_energy), consts.gamma);
      out.values(n, k) = consts.c0 * level_term * bracket;
    }
  }
  return out;
}

double mov_rms_noise_loud(const PartialLoudnessSeries& series,
                          std::size_t settle_frames) {
  const std::size_t n_frames = series.values.rows();
  if (settle_frames >= n_frames) {
    throw PipelineError("mov_rms_noise_loud: all frames inside settling interval");
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t n = settle_frames; n < n_frames; ++n) {
    double mean = 0.0;
    for (double v : series.values.row(n)) {
      mean += v;
    }
    mean /= static_cast<double>(series.values.cols());
    acc += mean * mean;
    ++count;
  }
  return std::sqrt(acc / static_cast<double>(count));
}

std::vector<double> nmr_mask_offsets(std::span<const double> band_bark, double base_db,
                                     double growth_db_per_band, double bark_knee) {
  std::vector<double> offsets(band_bark.size());
  std::size_t knee_index = band_bark.size();
  for (std::size_t b = 0; b < band_bark.size(); ++b) {
    if (band_bark[b] >= bark_knee) {
      knee_index = b;
      break;
    }
  }
  for (std::size_t b = 0; b < band_bark.size(); ++b) {
    offsets[b] = base_db + (b > knee_index ? growth_db_per_band * (b - knee_index) : 0.0);
  }
  return offsets;
}

NmrResult mov_segmental_nmr(const Matrix& ref_excitation,
                            const Matrix& error_band_energy,
                            std::span<const double> mask_offset_db,
                            std::size_t settle_frames) {
  require_same_shape(ref_excitation, error_band_energy, "mov_segmental_nmr");
  const std::size_t n_frames = ref_excitation.rows();
  const std::size_t bands = ref_excitation.cols();
  if (n_frames == 0) {
    throw std::invalid_argument("mov_segmental_nmr: zero-length input");
  }
  if (mask_offset_db.size() != bands) {
    throw std::invalid_argument("mov_segmental_nmr: offset size mismatch");
  }
  if (settle_frames >= n_frames) {
    throw PipelineError("mov_segmental_nmr: all frames inside settling interval");
  }

  NmrResult out;
  out.frame_ratio.resize(n_frames);
  for (std::size_t n = 0; n < n_frames; ++n) {
    double acc = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
      const double mask =
          ref_excitation(n, b) * std::pow(10.0, -mask_offset_db[b] / 10.0);
      acc += mask > 0.0 ? error_band_energy(n, b) / mask : 0.0;
    }
    out.frame_ratio[n] = acc / static_cast<double>(bands);
  }
  double mean_ratio = 0.0;
  for (std::size_t n = settle_frames; n < n_frames; ++n) {
    mean_ratio += out.frame_ratio[n];
  }
  mean_ratio /= static_cast<double>(n_frames - settle_frames);
  out.segmental_db = 10.0 * std::log10(std::max(mean_ratio, kLogRatioFloor));
  return out;
}

EhsResult mov_ehs(const Spectra& ref, const Spectra& sut,
                  const Matrix& error_band_energy, std::size_t settle_frames,
                  std::size_t lag_count) {
  require_same_shape(ref.power, sut.power, "mov_ehs");
  const std::size_t n_frames = ref.power.rows();
  const std::size_t half = ref.power.cols();
  if (n_frames == 0) {
    throw std::invalid_argument("mov_ehs: zero-length input");
  }
  // Bin 0 is DC (zeroed by the ear weighting); the log works on bins 1..half-1.
  const std::size_t n_bins = half - 1;
  const std::size_t lags = std::min(lag_count, n_bins / 2);

  EhsResult out;
  out.frame_values.assign(n_frames, 0.0);
  out.frame_weights.assign(n_frames, 0.0);
  out.frame_peak_bin.assign(n_frames, -1);
  out.band_series = Matrix(n_frames, error_band_energy.cols());

  RealFft corr_fft(next_pow2(2 * n_bins));
  RealFft peak_fft(next_pow2(lags));
  std::vector<double> hann(lags);
  double hann_sum = 0.0;
  for (std::size_t t = 0; t < lags; ++t) {
    hann[t] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / (lags - 1)));
    hann_sum += hann[t];
  }
  const double peak_norm = (hann_sum / 2.0) * (hann_sum / 2.0);

  std::vector<double> log_err(n_bins);
  std::vector<double> windowed(lags);
  std::vector<std::complex<double>> spec;
  std::vector<double> autocorr;
  std::vector<double> peak_spec_buf;

  for (std::size_t n = 0; n < n_frames; ++n) {
    auto pr = ref.power.row(n);
    auto pt = sut.power.row(n);
    double energy = 0.0;
    double mean_err = 0.0;
    for (std::size_t k = 1; k < half; ++k) {
      const double err = pr[k] - 2.0 * std::sqrt(pr[k] * pt[k]) + pt[k];
      log_err[k - 1] = err;
      energy += err;
      mean_err += err;
    }
    mean_err /= static_cast<double>(n_bins);
    out.frame_weights[n] = energy;
    if (!(mean_err > 0.0)) {
      continue;  // identical spectra: no error structure
    }

    // Log magnitude, mean removed; the relative epsilon keeps the result
    // exactly invariant under global error scaling.
    double log_mean = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      log_err[k] = std::log(log_err[k] + 1e-6 * mean_err);
      log_mean += log_err[k];
    }
    log_mean /= static_cast<double>(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
      log_err[k] -= log_mean;
    }

    corr_fft.forward(log_err, spec);
    for (auto& c : spec) {
      c = std::norm(c);
    }
    corr_fft.inverse(spec, autocorr);
    if (!(autocorr[0] > 0.0)) {
      continue;  // flat log spectrum
    }
    const double c0 = autocorr[0];
    double corr_mean = 0.0;
    for (std::size_t t = 0; t < lags; ++t) {
      corr_mean += autocorr[t] / c0;
    }
    corr_mean /= static_cast<double>(lags);
    for (std::size_t t = 0; t < lags; ++t) {
      windowed[t] = hann[t] * (autocorr[t] / c0 - corr_mean);
    }
    peak_fft.forward(windowed, spec);

    peak_spec_buf.resize(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      peak_spec_buf[i] = std::norm(spec[i]) / peak_norm;
    }
    double peak = 0.0;
    int peak_bin = -1;
    for (std::size_t i = 1; i + 1 < peak_spec_buf.size(); ++i) {
      if (peak_spec_buf[i] >= peak_spec_buf[i - 1] &&
          peak_spec_buf[i] >= peak_spec_buf[i + 1] && peak_spec_buf[i] > peak) {
        peak = peak_spec_buf[i];
        peak_bin = static_cast<int>(i);
      }
    }
    out.frame_values[n] = peak;
    out.frame_peak_bin[n] = peak_bin;

    auto bands = error_band_energy.row(n);
    double band_sum = 0.0;
    for (double b : bands) {
      band_sum += b;
    }
    if (band_sum > 0.0) {
      for (std::size_t b = 0; b < bands.size(); ++b) {
        out.band_series(n, b) = peak * bands[b] / band_sum;
      }
    }
  }

  double weighted = 0.0;
  double weight_sum = 0.0;
  for (std::size_t n = settle_frames; n < n_frames; ++n) {
    weighted += out.frame_values[n] * out.frame_weights[n];
    weight_sum += out.frame_weights[n];
  }
  out.scalar = weight_sum > 0.0 ? weighted / weight_sum : 0.0;
  return out;
}

}  // namespace paqm
