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

#ifndef PAQM_COGNITIVE_H_
#define PAQM_COGNITIVE_H_

#include <vector>

#include "paqm/distortion.h"
#include "paqm/matrix.h"

namespace paqm {

// Perceptual streaming: PS0 = (E_T+1)/(E_R+1), then a two-tap average over
// the previous frame. PS(0) is the unfiltered first frame.
Matrix ps_streaming(const Matrix& e_ref, const Matrix& e_test);

struct BandSeries {
  Matrix band;               // N x K
  std::vector<double> mean;  // per-frame mean over bands
};

// Power deviation: |E_R - windowed mean|, window centered on the frame and
// shrunk at the edges. Window length = max(1, round(window_s / hop)).
BandSeries pdev(const Matrix& e_ref, double frame_hop_duration,
                double window_s = 0.02);

// Moving sample variance of the near-threshold masking term, per band,
// centered window of max(2, round(window_s / hop)) frames, divisor
// (window count - 1), shrunk at the edges.
BandSeries beta_var(const Matrix& beta, double frame_hop_duration,
                    double window_s = 0.1);

struct ImpsConstants {
  double a = 1.0;
  double b = 1.0;
  double C = 1.0;
};

// Legacy combined streaming/masking modification of the disturbance
// loudness: N'_IMPS = C * PS^a * N' / (PDEV^b + C).
Matrix imps_legacy(const Matrix& ps, const std::vector<double>& pdev_mean,
                   const PartialLoudnessSeries& noise_loud,
                   const ImpsConstants& consts);

enum class Pooling { kMean, kMedian };

struct CemSeries {
  Matrix ps;
  Matrix pdev_band;
  std::vector<double> pdev;
  Matrix bvar_band;
  std::vector<double> bvar;
  double ps_summary = 0.0;
  double pdev_summary = 0.0;
  double bvar_summary = 0.0;
};

// Computes all three cognitive effect metrics plus their per-item
// summaries pooled over the active (post-settling) frames.
CemSeries compute_cem_series(const Matrix& e_ref, const Matrix& e_test,
                             const Matrix& beta, double frame_hop_duration,
                             double pdev_window_s, double bvar_window_s,
                             std::size_t settle_frames, Pooling pooling);

double pool_values(std::vector<double> values, Pooling pooling);

}  // namespace paqm

#endif  // PAQM_COGNITIVE_H_
