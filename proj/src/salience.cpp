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

#include "paqm/salience.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include "json.hpp"

#include "paqm/errors.h"
#include "paqm/nnls.h"
#include "paqm/stats.h"
#include "paqm/version.h"

namespace paqm {

namespace {

using Json = nlohmann::ordered_json;

double degradation(double score) { return 100.0 - score; }

std::vector<double> knots_from_quantiles(std::vector<double> values, int knot_count) {
  std::sort(values.begin(), values.end());
  std::vector<double> knots;
  const double range = values.back() - values.front();
  for (int j = 0; j < knot_count; ++j) {
    const double pos = static_cast<double>(j) / (knot_count - 1) *
                       static_cast<double>(values.size() - 1);
    const auto idx = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    const double q = idx + 1 < values.size()
                         ? values[idx] * (1.0 - frac) + values[idx + 1] * frac
                         : values[idx];
    if (knots.empty() || q - knots.back() > 1e-9 * std::max(range, 1.0)) {
      knots.push_back(q);
    }
  }
  return knots;
}

// Ramp value of increment segment j for input x: the fraction of segment
// [t_j, t_j+1] covered, so f(x) = sum_j ramp_j(x) * delta_j.
double segment_ramp(const std::vector<double>& knots, std::size_t j, double x) {
  const double t0 = knots[j];
  const double t1 = knots[j + 1];
  return std::clamp((x - t0) / (t1 - t0), 0.0, 1.0);
}

struct BasisLayout {
  std::vector<std::vector<double>> knots;  // per DM
  std::vector<std::size_t> offset;         // first increment index per DM
  std::size_t total = 0;
};

BasisLayout make_layout(const std::vector<ItemFeatures>& items, std::size_t n_dm,
                        int knot_count) {
  BasisLayout layout;
  layout.knots.resize(n_dm);
  layout.offset.resize(n_dm);
  for (std::size_t d = 0; d < n_dm; ++d) {
    std::vector<double> values(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      values[i] = items[i].dm[d];
    }
    layout.knots[d] = knots_from_quantiles(std::move(values), knot_count);
    layout.offset[d] = layout.total;
    layout.total += layout.knots[d].size() > 1 ? layout.knots[d].size() - 1 : 0;
  }
  return layout;
}

std::vector<BasisFunction> bases_from_increments(const BasisLayout& layout,
                                                 const Eigen::VectorXd& increments) {
  std::vector<BasisFunction> bases(layout.knots.size());
  for (std::size_t d = 0; d < layout.knots.size(); ++d) {
    bases[d].knots = layout.knots[d];
    bases[d].values.assign(layout.knots[d].size(), 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < layout.knots[d].size(); ++j) {
      acc += increments[static_cast<Eigen::Index>(layout.offset[d] + j)];
      bases[d].values[j + 1] = acc;
    }
  }
  return bases;
}

void validate_items(const std::vector<ItemFeatures>& items, std::size_t min_items,
                    const char* who) {
  if (items.size() < min_items) {
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(min_items) + " items, got " +
                                std::to_string(items.size()));
  }
  const std::size_t n_dm = items.front().dm.size();
  const std::size_t n_cem = items.front().cem.size();
  for (const auto& item : items) {
    if (item.dm.size() != n_dm || item.cem.size() != n_cem) {
      throw std::invalid_argument(std::string(who) + ": ragged feature vectors");
    }
    if (item.subjective_score < 0.0 || item.subjective_score > 100.0) {
      throw std::invalid_argument(std::string(who) + ": subjective score outside [0, 100]");
    }
  }
}

}  // namespace

double BasisFunction::operator()(double x) const {
  if (knots.empty()) {
    return 0.0;
  }
  if (x <= knots.front()) {
    return values.front();
  }
  if (x >= knots.back()) {
    return values.back();
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const auto j = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double frac = (x - knots[j]) / (knots[j + 1] - knots[j]);
  return values[j] + frac * (values[j + 1] - values[j]);
}

SalienceTargets compute_salience_targets(const std::vector<ItemFeatures>& items,
                                         const SalienceOptions& options) {
  validate_items(items, 20, "compute_salience_targets");
  const std::size_t n = items.size();
  const std::size_t n_dm = items.front().dm.size();

  double score_min = items.front().subjective_score;
  double score_max = score_min;
  std::size_t live_dms = 0;
  for (std::size_t d = 0; d < n_dm; ++d) {
    double lo = items.front().dm[d], hi = lo;
    for (const auto& item : items) {
      lo = std::min(lo, item.dm[d]);
      hi = std::max(hi, item.dm[d]);
    }
    if (hi > lo) {
      ++live_dms;
    }
  }
  for (const auto& item : items) {
    score_min = std::min(score_min, item.subjective_score);
    score_max = std::max(score_max, item.subjective_score);
  }
  if (!(score_max > score_min)) {
    throw std::invalid_argument("compute_salience_targets: degenerate DB (constant scores)");
  }
  if (live_dms < 2) {
    throw std::invalid_argument(
        "compute_salience_targets: need at least 2 DMs with nonzero variance");
  }

  const BasisLayout layout = make_layout(items, n_dm, options.knot_count);
  if (n < layout.total) {
    throw std::invalid_argument("compute_salience_targets: underdetermined fit");
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(layout.total));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    b[static_cast<Eigen::Index>(i)] = degradation(items[i].subjective_score);
    for (std::size_t d = 0; d < n_dm; ++d) {
      for (std::size_t j = 0; j + 1 < layout.knots[d].size(); ++j) {
        a(static_cast<Eigen::Index>(i),
          static_cast<Eigen::Index>(layout.offset[d] + j)) =
            segment_ramp(layout.knots[d], j, items[i].dm[d]);
      }
    }
  }
  const Eigen::VectorXd increments = nnls(a, b);

  SalienceTargets out;
  out.bases = bases_from_increments(layout, increments);
  out.values = Matrix(n, n_dm);
  out.defined = Matrix(n, n_dm);
  out.fitted_contribution_mean.assign(n_dm, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> contribution(n_dm);
    for (std::size_t d = 0; d < n_dm; ++d) {
      contribution[d] = out.bases[d](items[i].dm[d]);
      out.fitted_contribution_mean[d] += contribution[d] / static_cast<double>(n);
    }
    const std::vector<double> corrections = salience_corrections(
        degradation(items[i].subjective_score), contribution, options.min_contribution);
    for (std::size_t d = 0; d < n_dm; ++d) {
      if (!std::isnan(corrections[d])) {
        out.values(i, d) = corrections[d];
        out.defined(i, d) = 1.0;
      }
    }
  }
  return out;
}

std::vector<double> salience_corrections(double observed_degradation,
                                         std::span<const double> contributions,
                                         double min_contribution) {
  double predicted = 0.0;
  for (double c : contributions) {
    predicted += c;
  }
  std::vector<double> out(contributions.size(),
                          std::numeric_limits<double>::quiet_NaN());
  for (std::size_t d = 0; d < contributions.size(); ++d) {
    if (contributions[d] >= min_contribution) {
      out[d] = observed_degradation / predicted;
    }
  }
  return out;
}

InteractionTable correlate_interactions(const SalienceTargets& targets,
                                        const std::vector<ItemFeatures>& items,
                                        const std::vector<std::string>& cem_names,
                                        const std::vector<std::string>& dm_names) {
  const std::size_t n_cem = cem_names.size();
  const std::size_t n_dm = dm_names.size();
  if (items.empty() || items.front().cem.size() != n_cem ||
      targets.values.cols() != n_dm || targets.values.rows() != items.size()) {
    throw std::invalid_argument("correlate_interactions: shape mismatch");
  }

  InteractionTable table;
  table.cem_names = cem_names;
  table.dm_names = dm_names;
  table.r = Matrix(n_cem, n_dm);
  table.ci_low = Matrix(n_cem, n_dm);
  table.ci_high = Matrix(n_cem, n_dm);
  table.pair_count = Matrix(n_cem, n_dm);

  for (std::size_t c = 0; c < n_cem; ++c) {
    for (std::size_t d = 0; d < n_dm; ++d) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (targets.defined(i, d) > 0.0) {
          x.push_back(items[i].cem[c]);
          y.push_back(targets.values(i, d));
        }
      }
      const std::string cell = cem_names[c] + "/" + dm_names[d];
      if (x.size() < 10) {
        throw std::invalid_argument(
            "correlate_interactions: fewer than 10 paired observations for " + cell);
      }
      try {
        const PearsonResult p = pearson_with_ci(x, y);
        table.r(c, d) = p.r;
        table.ci_low(c, d) = p.ci_low;
        table.ci_high(c, d) = p.ci_high;
        table.pair_count(c, d) = static_cast<double>(p.n);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("correlate_interactions [" + cell + "]: " + e.what());
      }
    }
  }
  return table;
}

std::vector<Interaction> select_interactions(const InteractionTable& table,
                                             double threshold) {
  std::vector<Interaction> selected;
  for (std::size_t c = 0; c < table.r.rows(); ++c) {
    for (std::size_t d = 0; d < table.r.cols(); ++d) {
      const double r = table.r(c, d);
      if (std::abs(r) >= threshold) {
        selected.push_back({c, d, r < 0.0 ? -1 : 1, r});
      }
    }
  }
  return selected;
}

SalienceMappingModel train_mapping(const std::vector<ItemFeatures>& items,
                                   const std::vector<Interaction>& selected,
                                   const TrainOptions& options) {
  validate_items(items, 30, "train_mapping");
  const std::size_t n = items.size();
  const std::size_t n_dm = items.front().dm.size();
  const std::size_t n_cem = items.front().cem.size();
  for (const auto& gate : selected) {
    if (gate.dm_index >= n_dm || gate.cem_index >= n_cem) {
      throw std::invalid_argument("train_mapping: interaction index out of range");
    }
  }

  SalienceMappingModel model;
  model.version = kModelFormatVersion;
  model.dm_names = n_dm == kDefaultDmNames.size() ? kDefaultDmNames
                                                  : std::vector<std::string>();
  model.cem_names = n_cem == kDefaultCemNames.size() ? kDefaultCemNames
                                                     : std::vector<std::string>();
  if (model.dm_names.empty()) {
    for (std::size_t d = 0; d < n_dm; ++d) model.dm_names.push_back("DM" + std::to_string(d));
  }
  if (model.cem_names.empty()) {
    for (std::size_t c = 0; c < n_cem; ++c) model.cem_names.push_back("CEM" + std::to_string(c));
  }
  model.gate_max = options.gate_max;
  model.n_items = n;

  model.cem_mean.assign(n_cem, 0.0);
  model.cem_std.assign(n_cem, 0.0);
  for (std::size_t c = 0; c < n_cem; ++c) {
    for (const auto& item : items) {
      model.cem_mean[c] += item.cem[c];
    }
    model.cem_mean[c] /= static_cast<double>(n);
    for (const auto& item : items) {
      const double diff = item.cem[c] - model.cem_mean[c];
      model.cem_std[c] += diff * diff;
    }
    model.cem_std[c] = std::sqrt(model.cem_std[c] / static_cast<double>(n - 1));
    if (model.cem_std[c] < 1e-12) {
      model.cem_std[c] = 1.0;
    }
  }
  Matrix z(n, n_cem);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n_cem; ++c) {
      z(i, c) = (items[i].cem[c] - model.cem_mean[c]) / model.cem_std[c];
    }
  }

  const BasisLayout layout = make_layout(items, n_dm, options.knot_count);
  Matrix gates(n, n_dm, 1.0);
  Eigen::VectorXd lambdas = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(selected.size()));

  auto gate_value = [&](std::size_t i, std::size_t d) {
    double g = 1.0;
    for (std::size_t q = 0; q < selected.size(); ++q) {
      if (selected[q].dm_index == d) {
        g += lambdas[static_cast<Eigen::Index>(q)] * z(i, selected[q].cem_index);
      }
    }
    return std::clamp(g, 0.0, options.gate_max);
  };

  Eigen::VectorXd deg(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    deg[static_cast<Eigen::Index>(i)] = degradation(items[i].subjective_score);
  }

  std::vector<BasisFunction> bases;
  Matrix contribution(n, n_dm);
  double prev_objective = -1.0;

  for (int round = 0; round < options.max_rounds; ++round) {
    model.rounds = round + 1;

    // (i) basis knot increments with gates fixed
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(layout.total));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n_dm; ++d) {
        for (std::size_t j = 0; j + 1 < layout.knots[d].size(); ++j) {
          a(static_cast<Eigen::Index>(i),
            static_cast<Eigen::Index>(layout.offset[d] + j)) =
              gates(i, d) * segment_ramp(layout.knots[d], j, items[i].dm[d]);
        }
      }
    }
    bases = bases_from_increments(layout, nnls(a, deg));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n_dm; ++d) {
        contribution(i, d) = bases[d](items[i].dm[d]);
      }
    }

    // (ii) gate weights with bases fixed
    if (!selected.empty()) {
      Eigen::MatrixXd gmat(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(selected.size()));
      Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
      Eigen::VectorXi signs(static_cast<Eigen::Index>(selected.size()));
      for (std::size_t q = 0; q < selected.size(); ++q) {
        signs[static_cast<Eigen::Index>(q)] = selected[q].sign;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double base_sum = 0.0;
        for (std::size_t d = 0; d < n_dm; ++d) {
          base_sum += contribution(i, d);
        }
        resid[static_cast<Eigen::Index>(i)] = deg[static_cast<Eigen::Index>(i)] - base_sum;
        for (std::size_t q = 0; q < selected.size(); ++q) {
          gmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) =
              z(i, selected[q].cem_index) * contribution(i, selected[q].dm_index);
        }
      }
      lambdas = sign_constrained_lsq(gmat, resid, signs);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < n_dm; ++d) {
        gates(i, d) = gate_value(i, d);
      }
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double pred_deg = 0.0;
      for (std::size_t d = 0; d < n_dm; ++d) {
        pred_deg += gates(i, d) * contribution(i, d);
      }
      const double baq = std::clamp(100.0 - pred_deg, 0.0, 100.0);
      const double err = baq - items[i].subjective_score;
      objective += err * err;
    }
    objective /= static_cast<double>(n);
    model.train_rmse = std::sqrt(objective);

    if (prev_objective >= 0.0) {
      const double change = std::abs(prev_objective - objective);
      if (change < options.tolerance * std::max(prev_objective, 1e-12) ||
          objective < 1e-18) {
        model.converged = true;
        break;
      }
    }
    prev_objective = objective;
  }

  model.bases = bases;
  model.gates.clear();
  for (std::size_t q = 0; q < selected.size(); ++q) {
    model.gates.push_back({selected[q].dm_index, selected[q].cem_index,
                           selected[q].sign, lambdas[static_cast<Eigen::Index>(q)]});
  }
  model.trained = true;
  return model;
}

double predict_baq(const SalienceMappingModel& model, std::span<const double> dm,
                   std::span<const double> cem) {
  if (!model.trained) {
    throw PipelineError("predict_baq: untrained model");
  }
  if (dm.size() != model.bases.size() || cem.size() != model.cem_mean.size()) {
    throw std::invalid_argument("predict_baq: feature size mismatch");
  }
  double total = 0.0;
  for (std::size_t d = 0; d < dm.size(); ++d) {
    double gate = 1.0;
    for (const auto& gw : model.gates) {
      if (gw.dm_index == d) {
        const double zc = (cem[gw.cem_index] - model.cem_mean[gw.cem_index]) /
                          model.cem_std[gw.cem_index];
        gate += gw.lambda * zc;
      }
    }
    gate = std::clamp(gate, 0.0, model.gate_max);
    total += gate * model.bases[d](dm[d]);
  }
  return std::clamp(100.0 - total, 0.0, 100.0);
}

namespace {

Json basis_to_json(const BasisFunction& basis) {
  return Json{{"knots", basis.knots}, {"values", basis.values}};
}

BasisFunction basis_from_json(const Json& j) {
  BasisFunction basis;
  basis.knots = j.at("knots").get<std::vector<double>>();
  basis.values = j.at("values").get<std::vector<double>>();
  if (basis.knots.size() != basis.values.size()) {
    throw FormatError("model basis: knots/values size mismatch");
  }
  return basis;
}

}  // namespace

void save_model(const SalienceMappingModel& model, const std::filesystem::path& path,
                const std::string& config_echo_json) {
  Json doc;
  doc["version"] = model.version.empty() ? kModelFormatVersion : model.version;
  doc["tool_version"] = kVersion;
  doc["dm"] = model.dm_names;
  doc["cem"] = model.cem_names;
  Json bases = Json::array();
  for (std::size_t d = 0; d < model.bases.size(); ++d) {
    Json b = basis_to_json(model.bases[d]);
    b["dm"] = model.dm_names[d];
    bases.push_back(std::move(b));
  }
  doc["bases"] = std::move(bases);
  Json gates = Json::array();
  for (const auto& gw : model.gates) {
    gates.push_back(Json{{"dm", model.dm_names[gw.dm_index]},
                         {"cem", model.cem_names[gw.cem_index]},
                         {"sign", gw.sign},
                         {"lambda", gw.lambda}});
  }
  doc["gates"] = std::move(gates);
  doc["cem_mean"] = model.cem_mean;
  doc["cem_std"] = model.cem_std;
  doc["gate_max"] = model.gate_max;
  doc["training"] = Json{{"rmse", model.train_rmse},
                         {"rounds", model.rounds},
                         {"converged", model.converged},
                         {"n_items", model.n_items}};
  doc["config_echo"] = Json::parse(config_echo_json);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream file(tmp);
    if (!file) {
      throw IoError("cannot open for writing: " + tmp.string());
    }
    file << doc.dump(2) << "\n";
    if (!file) {
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

SalienceMappingModel load_model(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw IoError("cannot open model file: " + path.string());
  }
  Json doc;
  try {
    doc = Json::parse(file);
  } catch (const Json::parse_error& e) {
    throw FormatError("model parse error in " + path.string() + ": " + e.what());
  }
  try {
    SalienceMappingModel model;
    model.version = doc.at("version").get<std::string>();
    if (model.version != kModelFormatVersion) {
      throw FormatError("unsupported model version '" + model.version + "' in " +
                        path.string());
    }
    model.dm_names = doc.at("dm").get<std::vector<std::string>>();
    model.cem_names = doc.at("cem").get<std::vector<std::string>>();
    for (const auto& b : doc.at("bases")) {
      model.bases.push_back(basis_from_json(b));
    }
    for (const auto& g : doc.at("gates")) {
      GateWeight gw;
      const auto dm_name = g.at("dm").get<std::string>();
      const auto cem_name = g.at("cem").get<std::string>();
      const auto dm_it = std::find(model.dm_names.begin(), model.dm_names.end(), dm_name);
      const auto cem_it =
          std::find(model.cem_names.begin(), model.cem_names.end(), cem_name);
      if (dm_it == model.dm_names.end() || cem_it == model.cem_names.end()) {
        throw FormatError("model gate references unknown metric in " + path.string());
      }
      gw.dm_index = static_cast<std::size_t>(dm_it - model.dm_names.begin());
      gw.cem_index = static_cast<std::size_t>(cem_it - model.cem_names.begin());
      gw.sign = g.at("sign").get<int>();
      gw.lambda = g.at("lambda").get<double>();
      model.gates.push_back(gw);
    }
    model.cem_mean = doc.at("cem_mean").get<std::vector<double>>();
    model.cem_std = doc.at("cem_std").get<std::vector<double>>();
    model.gate_max = doc.at("gate_max").get<double>();
    const auto& training = doc.at("training");
    model.train_rmse = training.at("rmse").get<double>();
    model.rounds = training.at("rounds").get<int>();
    model.converged = training.at("converged").get<bool>();
    model.n_items = training.at("n_items").get<std::size_t>();
    model.trained = true;
    if (model.bases.size() != model.dm_names.size() ||
        model.cem_mean.size() != model.cem_names.size() ||
        model.cem_std.size() != model.cem_names.size()) {
      throw FormatError("model field sizes inconsistent in " + path.string());
    }
    return model;
  } catch (const Json::exception& e) {
    throw FormatError("model schema error in " + path.string() + ": " + e.what());
  }
}

}  // namespace paqm
