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

#ifndef PAQM_EAR_MODEL_H_
#define PAQM_EAR_MODEL_H_

#include <span>
#include <vector>

#include "paqm/audio.h"
#include "paqm/matrix.h"

namespace paqm {

struct FramePlan {
  int frame_size = 2048;  // power of two
  int hop = 1024;         // <= frame_size
};

// All ear-model constants in one place so they can be recalibrated against
// a reference implementation without touching code. Levels are model
// intensity units: a full-scale sine carries 10^(playback_level_db/10).
struct EarModelConfig {
  FramePlan plan;
  int band_count = 40;
  double low_freq_hz = 50.0;
  double high_freq_hz = 18000.0;
  double playback_level_db = 92.0;

  // Frequency spreading: triangular in dB over the Bark axis. The slope
  // toward higher bands flattens with the band's level relative to the
  // frame mean, so excitation stays exactly scale covariant (doubling the
  // input power doubles every excitation value).
  double lower_slope_db_per_bark = 27.0;
  double upper_slope_base_db_per_bark = 10.0;
  double upper_slope_freq_term = 230.0;     // added as term/fc_hz
  double upper_slope_level_term = 0.2;      // dB/Bark shed per relative dB
  double upper_slope_min_db_per_bark = 4.0;
  double relative_level_clamp_db = 30.0;

  double smear_time_constant_s = 0.030;

  // Modulation-to-masking-weight mapping s = s_min * (1 + c_mod * m).
  double s_min = 1.0;
  double c_mod = 10.0;
  double modulation_smoothing_s = 0.050;
};

// Outer/middle-ear weighted power spectra, one row per frame, cols are FFT
// bins 0..frame_size/2.
struct Spectra {
  Matrix power;
  double bin_hz = 0.0;
  double frame_duration = 0.0;  // seconds per hop
  int sample_rate = 0;
};

struct ExcitationSequence {
  Matrix values;  // N x K, model intensity units, includes the noise floor
  std::vector<double> band_centers;
  double frame_duration = 0.0;
};

struct ModulationWeights {
  Matrix values;  // N x K, dimensionless, > 0
};

class EarModel {
 public:
  explicit EarModel(int sample_rate, const EarModelConfig& config = {});

  const EarModelConfig& config() const { return config_; }
  int band_count() const { return config_.band_count; }
  const std::vector<double>& band_centers() const { return band_centers_; }
  const std::vector<double>& band_bark() const { return band_bark_; }
  // Frequency-dependent threshold-in-quiet floor added to every excitation.
  const std::vector<double>& internal_noise() const { return internal_noise_; }

  Spectra compute_spectra(const AudioSignal& signal) const;
  ExcitationSequence compute_excitation(const Spectra& spectra) const;
  ModulationWeights compute_modulation_weights(const ExcitationSequence& excitation) const;

  // Groups a row of per-bin powers into the model's bands (proportional
  // bin-edge overlap). Also used for the NMR error spectrum.
  void group_into_bands(std::span<const double> bins, std::span<double> bands) const;

  static double bark_from_hz(double hz);
  static double hz_from_bark(double bark);

 private:
  EarModelConfig config_;
  int sample_rate_;
  std::vector<double> window_;
  std::vector<double> ear_weight_;     // per bin, power domain
  std::vector<double> band_centers_;   // Hz, ascending
  std::vector<double> band_bark_;      // Bark at band centers
  std::vector<double> band_low_hz_;
  std::vector<double> band_high_hz_;
  std::vector<double> internal_noise_;
};

}  // namespace paqm

#endif  // PAQM_EAR_MODEL_H_
