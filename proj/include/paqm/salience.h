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

#ifndef PAQM_SALIENCE_H_
#define PAQM_SALIENCE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paqm/matrix.h"

namespace paqm {

inline const std::vector<std::string> kDefaultDmNames = {"RmsNoiseLoud",
                                                         "SegmentalNMR", "EHS"};
inline const std::vector<std::string> kDefaultCemNames = {"PS", "PDEV", "BVAR"};

// One listening-test item: distortion metric scalars, cognitive effect
// summaries and the pooled subjective score on the MUSHRA scale.
struct ItemFeatures {
  std::string item_id;
  std::vector<double> dm;
  std::vector<double> cem;
  double subjective_score = 0.0;  // [0, 100]
};

// Monotone non-decreasing piecewise-linear map from a distortion metric
// value to degradation in MUSHRA points. Evaluation clamps outside the
// knot range.
struct BasisFunction {
  std::vector<double> knots;   // ascending
  std::vector<double> values;  // non-decreasing, values.front() == 0

  double operator()(double x) const;
};

// Per item and DM: the multiplicative correction that reconciles the
// additive basis prediction with the observed degradation. Items where a
// DM's fitted contribution is below min_contribution MUSHRA points carry
// no salience information for that DM (defined == 0).
struct SalienceTargets {
  Matrix values;   // items x DMs
  Matrix defined;  // 1.0 where the target is defined
  std::vector<BasisFunction> bases;
  std::vector<double> fitted_contribution_mean;
};

struct SalienceOptions {
  int knot_count = 5;
  double min_contribution = 1.0;
};

// Residual attribution rule: the gap between observed degradation and the
// additive prediction is spread over the DMs in proportion to their fitted
// contributions, which reduces to one shared multiplicative factor. DMs
// contributing less than min_contribution get NaN (no salience signal).
std::vector<double> salience_corrections(double observed_degradation,
                                         std::span<const double> contributions,
                                         double min_contribution);

SalienceTargets compute_salience_targets(const std::vector<ItemFeatures>& items,
                                         const SalienceOptions& options = {});

struct Interaction {
  std::size_t cem_index = 0;
  std::size_t dm_index = 0;
  int sign = 0;  // +1 reinforcing, -1 suppressing
  double r = 0.0;
};

struct InteractionTable {
  std::vector<std::string> cem_names;
  std::vector<std::string> dm_names;
  Matrix r;        // CEM x DM
  Matrix ci_low;   // Fisher 95% bounds
  Matrix ci_high;
  Matrix pair_count;
  std::vector<Interaction> selected;
  double threshold = 0.6;
};

// Pearson correlation of every CEM against the salience targets of every
// DM, over the items where that DM's target is defined.
InteractionTable correlate_interactions(const SalienceTargets& targets,
                                        const std::vector<ItemFeatures>& items,
                                        const std::vector<std::string>& cem_names,
                                        const std::vector<std::string>& dm_names);

// Pairs with |r| >= threshold, in (CEM, DM) index order.
std::vector<Interaction> select_interactions(const InteractionTable& table,
                                             double threshold);

struct GateWeight {
  std::size_t dm_index = 0;
  std::size_t cem_index = 0;
  int sign = 0;
  double lambda = 0.0;
};

struct SalienceMappingModel {
  std::string version;
  std::vector<std::string> dm_names;
  std::vector<std::string> cem_names;
  std::vector<BasisFunction> bases;      // one per DM
  std::vector<GateWeight> gates;
  std::vector<double> cem_mean;
  std::vector<double> cem_std;
  double gate_max = 2.0;
  bool trained = false;
  bool converged = false;
  double train_rmse = 0.0;
  int rounds = 0;
  std::size_t n_items = 0;
};

struct TrainOptions {
  int knot_count = 5;
  double gate_max = 2.0;
  int max_rounds = 100;
  double tolerance = 1e-6;
};

// Alternating least squares over {basis knot values} and {gate weights};
// basis monotonicity is kept by fitting non-negative knot increments, gate
// signs follow the selected interactions.
SalienceMappingModel train_mapping(const std::vector<ItemFeatures>& items,
                                   const std::vector<Interaction>& selected,
                                   const TrainOptions& options = {});

double predict_baq(const SalienceMappingModel& model, std::span<const double> dm,
                   std::span<const double> cem);

// Versioned JSON round trip. save writes atomically (temp file + rename).
void save_model(const SalienceMappingModel& model, const std::filesystem::path& path,
                const std::string& config_echo_json = "{}");
SalienceMappingModel load_model(const std::filesystem::path& path);

}  // namespace paqm

#endif  // PAQM_SALIENCE_H_
