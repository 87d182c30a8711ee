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

#ifndef PAQM_PIPELINE_H_
#define PAQM_PIPELINE_H_

#include <functional>
#include <optional>

#include "paqm/audio.h"
#include "paqm/cognitive.h"
#include "paqm/config.h"
#include "paqm/distortion.h"

namespace paqm {

// Everything the pipeline measures for one REF/SUT pair.
struct ItemAnalysis {
  MovRecord mov;
  CemSeries cem;
  PartialLoudnessSeries loudness;
  EhsResult ehs;
  NmrResult nmr;
  std::optional<Matrix> imps;
  std::vector<double> band_centers;
  double frame_duration = 0.0;
  std::size_t n_frames = 0;
  std::size_t settle_frames = 0;
  long lag_samples = 0;
  double gain_applied_db = 0.0;

  std::vector<double> dm_vector() const {
    return {mov.rms_noise_loud, mov.segmental_nmr, mov.ehs};
  }
  std::vector<double> cem_vector() const {
    return {cem.ps_summary, cem.pdev_summary, cem.bvar_summary};
  }
};

ItemAnalysis analyze_pair(const AudioSignal& ref, const AudioSignal& sut,
                          const PipelineConfig& config);

ItemAnalysis analyze_files(const std::filesystem::path& ref_path,
                           const std::filesystem::path& sut_path,
                           const PipelineConfig& config);

// Runs fn(0..count-1) on a small worker pool. Exceptions are collected and
// the lowest-index failure is rethrown after all workers join.
void parallel_for_items(std::size_t count, int jobs,
                        const std::function<void(std::size_t)>& fn);

}  // namespace paqm

#endif  // PAQM_PIPELINE_H_
