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

#ifndef PAQM_DISTORTION_H_
#define PAQM_DISTORTION_H_

#include <span>
#include <vector>

#include "paqm/ear_model.h"
#include "paqm/matrix.h"

namespace paqm {

// Constants of the partial disturbance loudness model. threshold_energy
// (per band) and full_scale_energy are calibration values wired in from
// the ear model / pipeline configuration.
struct LoudnessConstants {
  double c0 = 0.068;
  double gamma = 0.23;
  double alpha = 1.5;
  std::vector<double> threshold_energy;  // E_th(k)
  double full_scale_energy = 1.585e9;    // E_0, 92 dB full-scale sine
};

struct PartialLoudnessSeries {
  Matrix values;  // N'(n,k) >= 0
  Matrix beta;    // near-threshold masking term, > 0
};

// beta(n,k) = exp(-alpha * (E_T - E_R) / E_R) with E_R floored at the
// internal-noise level (per-band floor; a scalar epsilon is used when no
// floor is given). The exponent is clamped so beta stays positive finite.
Matrix beta_term(const Matrix& e_ref, const Matrix& e_test, double alpha,
                 std::span<const double> noise_floor = {});

PartialLoudnessSeries partial_loudness(const Matrix& e_ref, const Matrix& e_test,
                                       const Matrix& s_ref, const Matrix& s_test,
                                       const LoudnessConstants& consts);

// RMS over frames (from settle_frames on) of the band-averaged N'.
double mov_rms_noise_loud(const PartialLoudnessSeries& series,
                          std::size_t settle_frames);

struct NmrResult {
  double segmental_db = 0.0;
  std::vector<double> frame_ratio;  // per-frame mean noise-to-mask ratio
};

// error_band_energy holds the band-grouped power of the spectral
// difference signal. The mask is the reference excitation lowered by the
// band-dependent offset (in dB).
NmrResult mov_segmental_nmr(const Matrix& ref_excitation,
                            const Matrix& error_band_energy,
                            std::span<const double> mask_offset_db,
                            std::size_t settle_frames);

// Offsets: base_db below the Bark knee, growing by growth_db_per_band for
// every band above it.
std::vector<double> nmr_mask_offsets(std::span<const double> band_bark, double base_db,
                                     double growth_db_per_band, double bark_knee);

struct EhsResult {
  double scalar = 0.0;
  std::vector<double> frame_values;   // per-frame peak height, [0, ~1]
  std::vector<double> frame_weights;  // frame error energy
  std::vector<int> frame_peak_bin;    // lag-spectrum bin of the peak, -1 if none
  Matrix band_series;                 // frame value distributed over bands
};

// Error harmonic structure. Per frame the log of the bin-level error power
// spectrum is autocorrelated over frequency lag; the peak of the power
// spectrum of that (windowed, DC-removed) correlation measures periodic
// structure. The scalar pools frames by error energy from settle_frames on.
EhsResult mov_ehs(const Spectra& ref, const Spectra& sut,
                  const Matrix& error_band_energy, std::size_t settle_frames,
                  std::size_t lag_count = 512);

struct MovRecord {
  double rms_noise_loud = 0.0;
  double segmental_nmr = 0.0;
  double ehs = 0.0;
};

}  // namespace paqm

#endif  // PAQM_DISTORTION_H_
