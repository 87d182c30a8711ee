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

#ifndef PAQM_CONFIG_H_
#define PAQM_CONFIG_H_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "paqm/audio.h"
#include "paqm/cognitive.h"
#include "paqm/ear_model.h"

namespace paqm {

// Every constant of the measurement pipeline. The full record is echoed
// verbatim into all output artifacts so runs stay reproducible.
struct PipelineConfig {
  EarModelConfig ear;
  AlignOptions align;

  double loudness_c0 = 0.068;
  double loudness_gamma = 0.23;
  double loudness_alpha = 1.5;
  // 0 derives E_0 from the playback level (full-scale sine intensity).
  double loudness_full_scale_energy = 0.0;

  double pdev_window_s = 0.02;
  double bvar_window_s = 0.1;
  Pooling cem_pooling = Pooling::kMean;

  double nmr_base_offset_db = 3.0;
  double nmr_growth_db_per_band = 0.25;
  double nmr_bark_knee = 12.0;

  int ehs_lag_count = 512;

  double settling_s = 0.5;
  double interaction_threshold = 0.6;

  bool imps_enabled = false;
  ImpsConstants imps;

  bool premap_monotone = true;
  bool pool_conditions = false;

  int jobs = 0;  // 0 = hardware concurrency

  double full_scale_energy() const;

  // Key-value text format: one `key = value` per line, '#' comments.
  static PipelineConfig from_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  nlohmann::ordered_json to_json() const;
};

}  // namespace paqm

#endif  // PAQM_CONFIG_H_
