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

#include "paqm/evaluation.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "paqm/errors.h"
#include "paqm/pipeline.h"

namespace paqm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double parse_score(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": invalid number '" + value + "'");
  }
}

}  // namespace

DbManifest DbManifest::load(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw IoError("cannot open manifest: " + path.string());
  }
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");

  std::string line;
  if (!std::getline(file, line)) {
    throw FormatError(path.string() + ":1: empty manifest");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  bool has_ci = false;
  if (line == "item_id,condition,ref_path,sut_path,mushra_mean,mushra_ci95") {
    has_ci = true;
  } else if (line != "item_id,condition,ref_path,sut_path,mushra_mean") {
    throw FormatError(path.string() + ":1: unexpected header '" + line + "'");
  }

  DbManifest manifest;
  std::set<std::pair<std::string, std::string>> seen;
  int line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    const std::size_t expected = has_ci ? 6 : 5;
    if (fields.size() != expected) {
      throw FormatError(where + ": expected " + std::to_string(expected) +
                        " fields, got " + std::to_string(fields.size()));
    }
    ManifestRow row;
    row.item_id = fields[0];
    row.condition = fields[1];
    row.ref_path = std::filesystem::path(fields[2]).is_absolute()
                       ? std::filesystem::path(fields[2])
                       : base / fields[2];
    row.sut_path = std::filesystem::path(fields[3]).is_absolute()
                       ? std::filesystem::path(fields[3])
                       : base / fields[3];
    row.mushra_mean = parse_score(fields[4], where);
    if (row.mushra_mean < 0.0 || row.mushra_mean > 100.0) {
      throw FormatError(where + ": mushra_mean outside [0, 100]");
    }
    if (has_ci && !fields[5].empty()) {
      row.mushra_ci95 = parse_score(fields[5], where);
    }
    if (!seen.insert({row.item_id, row.condition}).second) {
      throw FormatError(where + ": duplicate item_id/condition pair '" + row.item_id +
                        "/" + row.condition + "'");
    }
    if (!std::filesystem::exists(row.ref_path)) {
      throw IoError(where + ": ref_path not found: " + row.ref_path.string());
    }
    if (!std::filesystem::exists(row.sut_path)) {
      throw IoError(where + ": sut_path not found: " + row.sut_path.string());
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

EvaluationReport evaluate_features(std::span<const double> objective,
                                   std::span<const double> subjective,
                                   bool monotone_premap) {
  EvaluationReport report;
  report.n_items = objective.size();
  report.objective.assign(objective.begin(), objective.end());
  report.subjective.assign(subjective.begin(), subjective.end());
  report.poly_coeffs = fit_cubic_premap(objective, subjective, monotone_premap);
  report.premapped.resize(objective.size());
  for (std::size_t i = 0; i < objective.size(); ++i) {
    report.premapped[i] = eval_cubic(report.poly_coeffs, objective[i]);
  }
  report.pearson = pearson_with_ci(report.premapped, subjective);
  report.r_raw = pearson_with_ci(objective, subjective).r;
  return report;
}

std::vector<ItemFeatures> collect_features(const DbManifest& manifest,
                                           const PipelineConfig& config) {
  std::vector<ItemFeatures> features(manifest.rows.size());
  parallel_for_items(manifest.rows.size(), config.jobs, [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    try {
      const ItemAnalysis analysis =
          analyze_files(row.ref_path, row.sut_path, config);
      features[i].item_id = row.item_id + "/" + row.condition;
      features[i].dm = analysis.dm_vector();
      features[i].cem = analysis.cem_vector();
      features[i].subjective_score = row.mushra_mean;
    } catch (const std::exception& e) {
      throw PipelineError("row " + std::to_string(i + 1) + " (" + row.item_id + "/" +
                          row.condition + "): " + e.what());
    }
  });
  return features;
}

EvaluationReport evaluate_db(const DbManifest& manifest,
                             const SalienceMappingModel& model,
                             const PipelineConfig& config) {
  const std::vector<ItemFeatures> features = collect_features(manifest, config);

  std::vector<double> objective(features.size());
  std::vector<double> subjective(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    objective[i] = predict_baq(model, features[i].dm, features[i].cem);
    subjective[i] = features[i].subjective_score;
  }

  std::vector<double> stat_objective = objective;
  std::vector<double> stat_subjective = subjective;
  if (config.pool_conditions) {
    std::map<std::string, std::pair<double, std::size_t>> obj_pool;
    std::map<std::string, std::pair<double, std::size_t>> subj_pool;
    for (std::size_t i = 0; i < features.size(); ++i) {
      auto& o = obj_pool[manifest.rows[i].condition];
      auto& s = subj_pool[manifest.rows[i].condition];
      o.first += objective[i];
      s.first += subjective[i];
      ++o.second;
      ++s.second;
    }
    stat_objective.clear();
    stat_subjective.clear();
    for (const auto& [condition, pooled] : obj_pool) {
      stat_objective.push_back(pooled.first / pooled.second);
      stat_subjective.push_back(subj_pool[condition].first /
                                subj_pool[condition].second);
    }
  }

  EvaluationReport report = evaluate_features(stat_objective, stat_subjective,
                                              config.premap_monotone);
  report.objective = objective;
  report.subjective = subjective;
  report.premapped.resize(objective.size());
  for (std::size_t i = 0; i < objective.size(); ++i) {
    report.premapped[i] = eval_cubic(report.poly_coeffs, objective[i]);
  }
  report.n_items = features.size();
  for (const auto& row : manifest.rows) {
    report.item_ids.push_back(row.item_id);
    report.condition_ids.push_back(row.condition);
  }

  std::map<std::string, ConditionSummary> pooled;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& entry = pooled[manifest.rows[i].condition];
    entry.condition = manifest.rows[i].condition;
    entry.mean_subjective += subjective[i];
    entry.mean_objective += objective[i];
    ++entry.n;
  }
  for (auto& [name, entry] : pooled) {
    entry.mean_subjective /= static_cast<double>(entry.n);
    entry.mean_objective /= static_cast<double>(entry.n);
    report.conditions.push_back(entry);
  }
  return report;
}

}  // namespace paqm
