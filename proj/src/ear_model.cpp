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

#include "paqm/ear_model.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "paqm/fft.h"

namespace paqm {

namespace {
bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

double EarModel::bark_from_hz(double hz) {
  // Zwicker & Fastl.
  return 13.0 * std::atan(0.00076 * hz) +
         3.5 * std::atan((hz / 7500.0) * (hz / 7500.0));
}

double EarModel::hz_from_bark(double bark) {
  double lo = 0.0, hi = 30000.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bark_from_hz(mid) < bark ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EarModel::EarModel(int sample_rate, const EarModelConfig& config)
    : config_(config), sample_rate_(sample_rate) {
  if (sample_rate != 44100 && sample_rate != 48000) {
    throw std::invalid_argument("EarModel: sample rate must be 44100 or 48000");
  }
  if (!is_pow2(config_.plan.frame_size)) {
    throw std::invalid_argument("EarModel: frame_size must be a power of two");
  }
  if (config_.plan.hop <= 0 || config_.plan.hop > config_.plan.frame_size) {
    throw std::invalid_argument("EarModel: hop must be in (0, frame_size]");
  }
  if (config_.band_count < 2) {
    throw std::invalid_argument("EarModel: band_count must be >= 2");
  }

  const int frame = config_.plan.frame_size;
  // Hann window carrying sqrt(8/3) so the window has unit power gain;
  // total spectral intensity then tracks the signal's mean square.
  window_.resize(frame);
  for (int i = 0; i < frame; ++i) {
    window_[i] = std::sqrt(8.0 / 3.0) * 0.5 *
                 (1.0 - std::cos(2.0 * std::numbers::pi * i / (frame - 1)));
  }

  const int half = frame / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate_) / frame;
  ear_weight_.resize(half);
  ear_weight_[0] = 0.0;  // DC carries no acoustic meaning here
  for (int k = 1; k < half; ++k) {
    const double f_khz = k * bin_hz / 1000.0;
    const double w_db = -2.184 * std::pow(f_khz, -0.8) +
                        6.5 * std::exp(-0.6 * (f_khz - 3.3) * (f_khz - 3.3)) -
                        1e-3 * std::pow(f_khz, 3.6);
    ear_weight_[k] = std::pow(10.0, w_db / 10.0);
  }

  const int bands = config_.band_count;
  const double z_lo = bark_from_hz(config_.low_freq_hz);
  const double z_hi = bark_from_hz(config_.high_freq_hz);
  const double dz = (z_hi - z_lo) / bands;
  band_centers_.resize(bands);
  band_bark_.resize(bands);
  band_low_hz_.resize(bands);
  band_high_hz_.resize(bands);
  internal_noise_.resize(bands);
  for (int b = 0; b < bands; ++b) {
    const double z_center = z_lo + (b + 0.5) * dz;
    band_bark_[b] = z_center;
    band_centers_[b] = hz_from_bark(z_center);
    band_low_hz_[b] = hz_from_bark(z_lo + b * dz);
    band_high_hz_[b] = hz_from_bark(z_lo + (b + 1) * dz);
    const double f_khz = band_centers_[b] / 1000.0;
    internal_noise_[b] = std::pow(10.0, 0.4 * 0.364 * std::pow(f_khz, -0.8));
  }
}

Spectra EarModel::compute_spectra(const AudioSignal& signal) const {
  const int frame = config_.plan.frame_size;
  const int hop = config_.plan.hop;
  const auto len = static_cast<long>(signal.samples.size());
  if (len < frame) {
    throw std::invalid_argument("compute_spectra: signal shorter than one frame");
  }
  const std::size_t n_frames = static_cast<std::size_t>((len - frame) / hop) + 1;
  const int half = frame / 2 + 1;

  Spectra out;
  out.bin_hz = static_cast<double>(signal.sample_rate) / frame;
  out.frame_duration = static_cast<double>(hop) / signal.sample_rate;
  out.sample_rate = signal.sample_rate;
  out.power = Matrix(n_frames, half);

  // One-sided power scaled so a full-scale sine carries a total intensity
  // of 10^(playback_level_db / 10) across its spectral peak.
  const double scale = 2.0 * std::pow(10.0, config_.playback_level_db / 10.0) /
                       (static_cast<double>(frame) * frame);

  RealFft fft(frame);
  std::vector<double> buf(frame);
  std::vector<std::complex<double>> spec;
  for (std::size_t n = 0; n < n_frames; ++n) {
    const double* x = signal.samples.data() + n * hop;
    for (int i = 0; i < frame; ++i) {
      buf[i] = x[i] * window_[i];
    }
    fft.forward(buf, spec);
    auto row = out.power.row(n);
    for (int k = 0; k < half; ++k) {
      const double two_sided = (k == 0 || k == half - 1) ? 1.0 : 2.0;
      row[k] = scale * two_sided * std::norm(spec[k]) * ear_weight_[k];
    }
  }
  return out;
}

void EarModel::group_into_bands(std::span<const double> bins,
                                std::span<double> bands) const {
  const double bin_hz = static_cast<double>(sample_rate_) / config_.plan.frame_size;
  const int n_bands = config_.band_count;
  if (static_cast<int>(bands.size()) != n_bands) {
    throw std::invalid_argument("group_into_bands: wrong band span size");
  }
  std::fill(bands.begin(), bands.end(), 0.0);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double f_lo = (static_cast<double>(k) - 0.5) * bin_hz;
    const double f_hi = f_lo + bin_hz;
    for (int b = 0; b < n_bands; ++b) {
      if (band_high_hz_[b] <= f_lo) continue;
      if (band_low_hz_[b] >= f_hi) break;
      const double overlap =
          std::min(f_hi, band_high_hz_[b]) - std::max(f_lo, band_low_hz_[b]);
      if (overlap > 0.0) {
        bands[b] += bins[k] * (overlap / bin_hz);
      }
    }
  }
}

ExcitationSequence EarModel::compute_excitation(const Spectra& spectra) const {
  const std::size_t n_frames = spectra.power.rows();
  const int bands = config_.band_count;
  ExcitationSequence out;
  out.band_centers = band_centers_;
  out.frame_duration = spectra.frame_duration;
  out.values = Matrix(n_frames, bands);

  const double dz =
      (bark_from_hz(config_.high_freq_hz) - bark_from_hz(config_.low_freq_hz)) /
      bands;
  const double smear_a =
      std::exp(-static_cast<double>(config_.plan.hop) /
               (sample_rate_ * config_.smear_time_constant_s));

  std::vector<double> grouped(bands);
  std::vector<double> spread(bands);
  std::vector<double> kernel(bands);
  std::vector<double> smeared(bands, 0.0);

  for (std::size_t n = 0; n < n_frames; ++n) {
    group_into_bands(spectra.power.row(n), grouped);

    // Triangular spreading in dB over Bark distance. The upper slope
    // flattens for bands loud relative to the frame mean; using the
    // relative level keeps the whole transform homogeneous of degree one.
    double frame_mean = 0.0;
    for (double e : grouped) frame_mean += e;
    frame_mean /= bands;
    std::fill(spread.begin(), spread.end(), 0.0);
    if (frame_mean > 0.0) {
      for (int j = 0; j < bands; ++j) {
        const double energy = grouped[j];
        if (energy <= 0.0) continue;
        const double rel_db = std::clamp(10.0 * std::log10(energy / frame_mean),
                                         -config_.relative_level_clamp_db,
                                         config_.relative_level_clamp_db);
        const double upper_slope =
            std::max(config_.upper_slope_min_db_per_bark,
                     config_.upper_slope_base_db_per_bark +
                         config_.upper_slope_freq_term / band_centers_[j] -
                         config_.upper_slope_level_term * rel_db);
        double norm = 0.0;
        for (int i = 0; i < bands; ++i) {
          const double dist = std::abs(i - j) * dz;
          const double slope =
              i < j ? config_.lower_slope_db_per_bark : upper_slope;
          kernel[i] = std::pow(10.0, -slope * dist / 10.0);
          norm += kernel[i];
        }
        const double contribution = energy / norm;
        for (int i = 0; i < bands; ++i) {
          spread[i] += contribution * kernel[i];
        }
      }
    }

    // Forward-masking smear: onsets pass, offsets decay with the time
    // constant; then the threshold-in-quiet floor.
    auto row = out.values.row(n);
    for (int b = 0; b < bands; ++b) {
      const double low_passed =
          n == 0 ? spread[b] : smear_a * smeared[b] + (1.0 - smear_a) * spread[b];
      smeared[b] = std::max(spread[b], low_passed);
      row[b] = smeared[b] + internal_noise_[b];
    }
  }
  return out;
}

ModulationWeights EarModel::compute_modulation_weights(
    const ExcitationSequence& excitation) const {
  const std::size_t n_frames = excitation.values.rows();
  const std::size_t bands = excitation.values.cols();
  if (n_frames < 2) {
    throw std::invalid_argument("compute_modulation_weights: need at least 2 frames");
  }

  const double a = std::exp(-excitation.frame_duration / config_.modulation_smoothing_s);
  ModulationWeights out;
  out.values = Matrix(n_frames, bands);

  std::vector<double> prev_compressed(bands);
  std::vector<double> deriv_avg(bands, 0.0);
  std::vector<double> level_avg(bands);
  for (std::size_t n = 0; n < n_frames; ++n) {
    for (std::size_t b = 0; b < bands; ++b) {
      const double compressed = std::pow(excitation.values(n, b), 0.3);
      if (n == 0) {
        level_avg[b] = compressed;
      } else {
        deriv_avg[b] = a * deriv_avg[b] +
                       (1.0 - a) * std::abs(compressed - prev_compressed[b]);
        level_avg[b] = a * level_avg[b] + (1.0 - a) * compressed;
      }
      prev_compressed[b] = compressed;
      const double modulation = level_avg[b] > 0.0 ? deriv_avg[b] / level_avg[b] : 0.0;
      out.values(n, b) = config_.s_min * (1.0 + config_.c_mod * modulation);
    }
  }
  return out;
}

}  // namespace paqm
