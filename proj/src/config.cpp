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

#include "paqm/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "paqm/errors.h"

namespace paqm {

double PipelineConfig::full_scale_energy() const {
  return loudness_full_scale_energy > 0.0
             ? loudness_full_scale_energy
             : std::pow(10.0, ear.playback_level_db / 10.0);
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': invalid number '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key '" + key + "': invalid integer '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw FormatError("config key '" + key + "': invalid boolean '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "ear.frame_size") ear.plan.frame_size = parse_int(key, value);
  else if (key == "ear.hop") ear.plan.hop = parse_int(key, value);
  else if (key == "ear.band_count") ear.band_count = parse_int(key, value);
  else if (key == "ear.low_freq_hz") ear.low_freq_hz = parse_double(key, value);
  else if (key == "ear.high_freq_hz") ear.high_freq_hz = parse_double(key, value);
  else if (key == "ear.playback_level_db") ear.playback_level_db = parse_double(key, value);
  else if (key == "ear.lower_slope_db_per_bark") ear.lower_slope_db_per_bark = parse_double(key, value);
  else if (key == "ear.upper_slope_base_db_per_bark") ear.upper_slope_base_db_per_bark = parse_double(key, value);
  else if (key == "ear.upper_slope_freq_term") ear.upper_slope_freq_term = parse_double(key, value);
  else if (key == "ear.upper_slope_level_term") ear.upper_slope_level_term = parse_double(key, value);
  else if (key == "ear.upper_slope_min_db_per_bark") ear.upper_slope_min_db_per_bark = parse_double(key, value);
  else if (key == "ear.relative_level_clamp_db") ear.relative_level_clamp_db = parse_double(key, value);
  else if (key == "ear.smear_time_constant_s") ear.smear_time_constant_s = parse_double(key, value);
  else if (key == "ear.s_min") ear.s_min = parse_double(key, value);
  else if (key == "ear.c_mod") ear.c_mod = parse_double(key, value);
  else if (key == "ear.modulation_smoothing_s") ear.modulation_smoothing_s = parse_double(key, value);
  else if (key == "loudness.c0") loudness_c0 = parse_double(key, value);
  else if (key == "loudness.gamma") loudness_gamma = parse_double(key, value);
  else if (key == "loudness.alpha") loudness_alpha = parse_double(key, value);
  else if (key == "loudness.full_scale_energy") loudness_full_scale_energy = parse_double(key, value);
  else if (key == "cem.pdev_window_s") pdev_window_s = parse_double(key, value);
  else if (key == "cem.bvar_window_s") bvar_window_s = parse_double(key, value);
  else if (key == "cem.pooling") {
    if (value == "mean") cem_pooling = Pooling::kMean;
    else if (value == "median") cem_pooling = Pooling::kMedian;
    else throw FormatError("config key 'cem.pooling': expected mean|median, got '" + value + "'");
  }
  else if (key == "nmr.base_offset_db") nmr_base_offset_db = parse_double(key, value);
  else if (key == "nmr.growth_db_per_band") nmr_growth_db_per_band = parse_double(key, value);
  else if (key == "nmr.bark_knee") nmr_bark_knee = parse_double(key, value);
  else if (key == "ehs.lag_count") ehs_lag_count = parse_int(key, value);
  else if (key == "pipeline.settling_s") settling_s = parse_double(key, value);
  else if (key == "pipeline.jobs") jobs = parse_int(key, value);
  else if (key == "align.enabled") align.align_lag = parse_bool(key, value);
  else if (key == "align.match_gain") align.match_gain = parse_bool(key, value);
  else if (key == "align.max_lag") align.max_lag = parse_int(key, value);
  else if (key == "align.min_peak_correlation") align.min_peak_correlation = parse_double(key, value);
  else if (key == "interaction.threshold") interaction_threshold = parse_double(key, value);
  else if (key == "imps.enabled") imps_enabled = parse_bool(key, value);
  else if (key == "imps.a") imps.a = parse_double(key, value);
  else if (key == "imps.b") imps.b = parse_double(key, value);
  else if (key == "imps.C") imps.C = parse_double(key, value);
  else if (key == "evaluation.monotone_premap") premap_monotone = parse_bool(key, value);
  else if (key == "evaluation.pool_conditions") pool_conditions = parse_bool(key, value);
  else throw FormatError("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw IoError("cannot open config file: " + path.string());
  }
  PipelineConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["ear.frame_size"] = ear.plan.frame_size;
  j["ear.hop"] = ear.plan.hop;
  j["ear.band_count"] = ear.band_count;
  j["ear.low_freq_hz"] = ear.low_freq_hz;
  j["ear.high_freq_hz"] = ear.high_freq_hz;
  j["ear.playback_level_db"] = ear.playback_level_db;
  j["ear.lower_slope_db_per_bark"] = ear.lower_slope_db_per_bark;
  j["ear.upper_slope_base_db_per_bark"] = ear.upper_slope_base_db_per_bark;
  j["ear.upper_slope_freq_term"] = ear.upper_slope_freq_term;
  j["ear.upper_slope_level_term"] = ear.upper_slope_level_term;
  j["ear.upper_slope_min_db_per_bark"] = ear.upper_slope_min_db_per_bark;
  j["ear.relative_level_clamp_db"] = ear.relative_level_clamp_db;
  j["ear.smear_time_constant_s"] = ear.smear_time_constant_s;
  j["ear.s_min"] = ear.s_min;
  j["ear.c_mod"] = ear.c_mod;
  j["ear.modulation_smoothing_s"] = ear.modulation_smoothing_s;
  j["loudness.c0"] = loudness_c0;
  j["loudness.gamma"] = loudness_gamma;
  j["loudness.alpha"] = loudness_alpha;
  j["loudness.full_scale_energy"] = full_scale_energy();
  j["cem.pdev_window_s"] = pdev_window_s;
  j["cem.bvar_window_s"] = bvar_window_s;
  j["cem.pooling"] = cem_pooling == Pooling::kMedian ? "median" : "mean";
  j["nmr.base_offset_db"] = nmr_base_offset_db;
  j["nmr.growth_db_per_band"] = nmr_growth_db_per_band;
  j["nmr.bark_knee"] = nmr_bark_knee;
  j["ehs.lag_count"] = ehs_lag_count;
  j["pipeline.settling_s"] = settling_s;
  j["pipeline.jobs"] = jobs;
  j["align.enabled"] = align.align_lag;
  j["align.match_gain"] = align.match_gain;
  j["align.max_lag"] = align.max_lag;
  j["align.min_peak_correlation"] = align.min_peak_correlation;
  j["interaction.threshold"] = interaction_threshold;
  j["imps.enabled"] = imps_enabled;
  j["imps.a"] = imps.a;
  j["imps.b"] = imps.b;
  j["imps.C"] = imps.C;
  j["evaluation.monotone_premap"] = premap_monotone;
  j["evaluation.pool_conditions"] = pool_conditions;
  return j;
}

}  // namespace paqm
