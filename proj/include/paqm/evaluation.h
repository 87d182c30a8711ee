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

#ifndef PAQM_EVALUATION_H_
#define PAQM_EVALUATION_H_

#include <optional>
#include <string>
#include <vector>

#include "paqm/config.h"
#include "paqm/salience.h"
#include "paqm/stats.h"

namespace paqm {

struct ManifestRow {
  std::string item_id;
  std::string condition;
  std::filesystem::path ref_path;
  std::filesystem::path sut_path;
  double mushra_mean = 0.0;
  std::optional<double> mushra_ci95;
};

// CSV manifest: header item_id,condition,ref_path,sut_path,mushra_mean
// with an optional trailing mushra_ci95 column. Relative paths resolve
// against the manifest's directory and must exist.
struct DbManifest {
  std::vector<ManifestRow> rows;
  static DbManifest load(const std::filesystem::path& path);
};

struct ConditionSummary {
  std::string condition;
  double mean_subjective = 0.0;
  double mean_objective = 0.0;
  std::size_t n = 0;
};

struct EvaluationReport {
  PearsonResult pearson;                // after the cubic pre-map
  double r_raw = 0.0;                   // plain correlation, diagnostic
  std::array<double, 4> poly_coeffs{};  // ascending powers
  std::size_t n_items = 0;
  std::vector<ConditionSummary> conditions;
  std::vector<std::string> item_ids;
  std::vector<std::string> condition_ids;
  std::vector<double> objective;
  std::vector<double> subjective;
  std::vector<double> premapped;
};

// Correlation statistics on already-computed scores: cubic pre-map fitted
// objective -> subjective, Pearson R with 95% CI on the premapped values.
EvaluationReport evaluate_features(std::span<const double> objective,
                                   std::span<const double> subjective,
                                   bool monotone_premap = true);

// Full per-row pipeline + prediction + statistics for a manifest.
EvaluationReport evaluate_db(const DbManifest& manifest,
                             const SalienceMappingModel& model,
                             const PipelineConfig& config);

// Pipeline features for every manifest row (used by analyze/train paths).
std::vector<ItemFeatures> collect_features(const DbManifest& manifest,
                                           const PipelineConfig& config);

}  // namespace paqm

#endif  // PAQM_EVALUATION_H_
