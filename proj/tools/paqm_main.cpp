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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "paqm/errors.h"
#include "paqm/evaluation.h"
#include "paqm/pipeline.h"
#include "paqm/salience.h"
#include "paqm/version.h"

namespace {

using Json = nlohmann::ordered_json;
using paqm::PipelineConfig;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitPipeline = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path,
                  "Config file (default: $PAQM_CONFIG if set)");
  cmd->add_option("--set", common.overrides,
                  "Override a config key, e.g. --set ear.hop=512")
      ->take_all();
}

PipelineConfig make_config(const CommonOptions& common) {
  PipelineConfig config;
  std::string path = common.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PAQM_CONFIG")) {
      path = env;
    }
  }
  if (!path.empty()) {
    config = PipelineConfig::from_file(path);
  }
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw paqm::FormatError("--set expects key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

// All artifacts go through a temp file and a rename so failures never
// leave partial output behind.
void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream file(tmp);
    if (!file) {
      throw paqm::IoError("cannot open for writing: " + tmp.string());
    }
    file << text;
    if (!file) {
      throw paqm::IoError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Json analysis_to_json(const paqm::ItemAnalysis& analysis, const PipelineConfig& config) {
  Json j;
  j["tool_version"] = paqm::kVersion;
  j["mov"] = Json{{"RmsNoiseLoud", analysis.mov.rms_noise_loud},
                  {"SegmentalNMR", analysis.mov.segmental_nmr},
                  {"EHS", analysis.mov.ehs}};
  j["cem"] = Json{{"PS", analysis.cem.ps_summary},
                  {"PDEV", analysis.cem.pdev_summary},
                  {"BVAR", analysis.cem.bvar_summary}};
  j["alignment"] = Json{{"lag_samples", analysis.lag_samples},
                        {"gain_applied_db", analysis.gain_applied_db}};
  j["frames"] = Json{{"count", analysis.n_frames},
                     {"settle", analysis.settle_frames},
                     {"duration_s", analysis.frame_duration}};
  j["config"] = config.to_json();
  return j;
}

int cmd_compare(const std::string& ref_path, const std::string& sut_path,
                const std::string& model_path, const std::string& out_path,
                bool as_json, const CommonOptions& common) {
  const PipelineConfig config = make_config(common);
  const paqm::ItemAnalysis analysis = paqm::analyze_files(ref_path, sut_path, config);
  Json j = analysis_to_json(analysis, config);

  if (!model_path.empty()) {
    const paqm::SalienceMappingModel model = paqm::load_model(model_path);
    const double baq =
        paqm::predict_baq(model, analysis.dm_vector(), analysis.cem_vector());
    j["baq"] = baq;
  }

  std::ostringstream text;
  if (as_json) {
    text << j.dump(2) << "\n";
  } else {
    text << "RmsNoiseLoud  " << analysis.mov.rms_noise_loud << "\n"
         << "SegmentalNMR  " << analysis.mov.segmental_nmr << " dB\n"
         << "EHS           " << analysis.mov.ehs << "\n"
         << "PS            " << analysis.cem.ps_summary << "\n"
         << "PDEV          " << analysis.cem.pdev_summary << "\n"
         << "BVAR          " << analysis.cem.bvar_summary << "\n"
         << "lag           " << analysis.lag_samples << " samples\n";
    if (j.contains("baq")) {
      text << "BAQ           " << j["baq"].get<double>() << "\n";
    }
  }
  if (out_path.empty()) {
    std::cout << text.str();
  } else {
    write_text_atomic(out_path, as_json ? text.str() : j.dump(2) + "\n");
  }
  return 0;
}

Json table_to_json(const paqm::InteractionTable& table) {
  Json j;
  j["cem"] = table.cem_names;
  j["dm"] = table.dm_names;
  Json rows = Json::array();
  for (std::size_t c = 0; c < table.r.rows(); ++c) {
    Json row;
    row["cem"] = table.cem_names[c];
    Json cells = Json::array();
    for (std::size_t d = 0; d < table.r.cols(); ++d) {
      cells.push_back(Json{{"dm", table.dm_names[d]},
                           {"r", table.r(c, d)},
                           {"ci95", Json::array({table.ci_low(c, d), table.ci_high(c, d)})},
                           {"n", table.pair_count(c, d)}});
    }
    row["cells"] = std::move(cells);
    rows.push_back(std::move(row));
  }
  j["correlations"] = std::move(rows);
  j["threshold"] = table.threshold;
  Json selected = Json::array();
  for (const auto& s : table.selected) {
    selected.push_back(Json{{"cem", table.cem_names[s.cem_index]},
                            {"dm", table.dm_names[s.dm_index]},
                            {"sign", s.sign},
                            {"r", s.r}});
  }
  j["selected"] = std::move(selected);
  return j;
}

int cmd_analyze_interactions(const std::string& manifest_path, const std::string& out_base,
                             double threshold_override, const CommonOptions& common) {
  PipelineConfig config = make_config(common);
  if (threshold_override >= 0.0) {
    config.interaction_threshold = threshold_override;
  }
  const paqm::DbManifest manifest = paqm::DbManifest::load(manifest_path);
  if (manifest.rows.size() < 20) {
    throw paqm::FormatError("analyze-interactions needs at least 20 manifest rows, got " +
                            std::to_string(manifest.rows.size()));
  }
  const std::vector<paqm::ItemFeatures> features =
      paqm::collect_features(manifest, config);
  const paqm::SalienceTargets targets = paqm::compute_salience_targets(features);
  paqm::InteractionTable table = paqm::correlate_interactions(
      targets, features, paqm::kDefaultCemNames, paqm::kDefaultDmNames);
  table.threshold = config.interaction_threshold;
  table.selected = paqm::select_interactions(table, table.threshold);

  // Matrix CSV: one row per CEM, one column per DM.
  std::ostringstream csv;
  csv << "cem";
  for (const auto& dm : table.dm_names) {
    csv << "," << dm;
  }
  csv << "\n";
  for (std::size_t c = 0; c < table.r.rows(); ++c) {
    csv << table.cem_names[c];
    for (std::size_t d = 0; d < table.r.cols(); ++d) {
      csv << "," << table.r(c, d);
    }
    csv << "\n";
  }
  write_text_atomic(out_base + ".csv", csv.str());

  Json j = table_to_json(table);
  j["tool_version"] = paqm::kVersion;
  j["config"] = config.to_json();
  write_text_atomic(out_base + ".json", j.dump(2) + "\n");

  std::cout << "interaction table written to " << out_base << ".csv / .json ("
            << table.selected.size() << " selected)\n";
  return 0;
}

std::vector<paqm::Interaction> load_interactions(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw paqm::IoError("cannot open interactions file: " + path);
  }
  Json doc;
  try {
    doc = Json::parse(file);
  } catch (const Json::parse_error& e) {
    throw paqm::FormatError("interactions parse error in " + path + ": " + e.what());
  }
  try {
    std::vector<paqm::Interaction> selected;
    for (const auto& s : doc.at("selected")) {
      paqm::Interaction item;
      const auto cem = s.at("cem").get<std::string>();
      const auto dm = s.at("dm").get<std::string>();
      const auto cem_it =
          std::find(paqm::kDefaultCemNames.begin(), paqm::kDefaultCemNames.end(), cem);
      const auto dm_it =
          std::find(paqm::kDefaultDmNames.begin(), paqm::kDefaultDmNames.end(), dm);
      if (cem_it == paqm::kDefaultCemNames.end() || dm_it == paqm::kDefaultDmNames.end()) {
        throw paqm::FormatError("interactions file " + path +
                                ": unknown metric name in selected list");
      }
      item.cem_index =
          static_cast<std::size_t>(cem_it - paqm::kDefaultCemNames.begin());
      item.dm_index = static_cast<std::size_t>(dm_it - paqm::kDefaultDmNames.begin());
      item.sign = s.at("sign").get<int>();
      item.r = s.value("r", 0.0);
      selected.push_back(item);
    }
    return selected;
  } catch (const Json::exception& e) {
    throw paqm::FormatError("interactions schema error in " + path + ": " + e.what());
  }
}

int cmd_train(const std::string& manifest_path, const std::string& interactions_path,
              const std::string& out_model, const CommonOptions& common) {
  const PipelineConfig config = make_config(common);
  const paqm::DbManifest manifest = paqm::DbManifest::load(manifest_path);
  const std::vector<paqm::Interaction> selected = load_interactions(interactions_path);
  const std::vector<paqm::ItemFeatures> features =
      paqm::collect_features(manifest, config);
  const paqm::SalienceMappingModel model = paqm::train_mapping(features, selected);
  paqm::save_model(model, out_model, config.to_json().dump());
  std::cout << "model written to " << out_model << " (train RMSE " << model.train_rmse
            << ", " << model.rounds << " rounds"
            << (model.converged ? "" : ", NOT converged") << ")\n";
  return 0;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& model_path,
                 const std::string& out_path, bool pool_conditions,
                 const CommonOptions& common) {
  PipelineConfig config = make_config(common);
  if (pool_conditions) {
    config.pool_conditions = true;
  }
  const paqm::DbManifest manifest = paqm::DbManifest::load(manifest_path);
  const paqm::SalienceMappingModel model = paqm::load_model(model_path);
  const paqm::EvaluationReport report = paqm::evaluate_db(manifest, model, config);

  Json j;
  j["tool_version"] = paqm::kVersion;
  j["n_items"] = report.n_items;
  j["R"] = report.pearson.r;
  j["ci95"] = Json::array({report.pearson.ci_low, report.pearson.ci_high});
  j["r_raw"] = report.r_raw;
  j["poly_coeffs"] = report.poly_coeffs;
  Json conditions = Json::array();
  for (const auto& c : report.conditions) {
    conditions.push_back(Json{{"condition", c.condition},
                              {"mean_subjective", c.mean_subjective},
                              {"mean_objective", c.mean_objective},
                              {"n", c.n}});
  }
  j["conditions"] = std::move(conditions);
  Json items = Json::array();
  for (std::size_t i = 0; i < report.objective.size(); ++i) {
    items.push_back(Json{{"item_id", report.item_ids[i]},
                         {"condition", report.condition_ids[i]},
                         {"baq", report.objective[i]},
                         {"premapped", report.premapped[i]},
                         {"mushra", report.subjective[i]}});
  }
  j["items"] = std::move(items);
  j["config"] = config.to_json();

  std::cout << "items: " << report.n_items << "\n"
            << "R (premapped): " << report.pearson.r << "  CI95 ["
            << report.pearson.ci_low << ", " << report.pearson.ci_high << "]\n"
            << "condition              mushra    baq\n";
  for (const auto& c : report.conditions) {
    std::cout << c.condition;
    for (std::size_t pad = c.condition.size(); pad < 20; ++pad) {
      std::cout << ' ';
    }
    std::cout << "  " << c.mean_subjective << "  " << c.mean_objective << "\n";
  }
  if (!out_path.empty()) {
    write_text_atomic(out_path, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_export_heatmap(const std::string& ref_path, const std::string& sut_path,
                       const std::string& metric, const std::string& out_path,
                       const std::string& image_path, const CommonOptions& common) {
  const PipelineConfig config = make_config(common);
  const paqm::ItemAnalysis analysis = paqm::analyze_files(ref_path, sut_path, config);

  const paqm::Matrix* series = nullptr;
  if (metric == "ehs") series = &analysis.ehs.band_series;
  else if (metric == "pdev") series = &analysis.cem.pdev_band;
  else if (metric == "bvar") series = &analysis.cem.bvar_band;
  else if (metric == "ps") series = &analysis.cem.ps;
  else if (metric == "nprime") series = &analysis.loudness.values;
  else {
    throw paqm::FormatError("unknown metric '" + metric +
                            "' (expected ehs|pdev|bvar|ps|nprime)");
  }

  // CSV matrix: row = band (row 1 = lowest frequency), column = frame.
  std::ostringstream csv;
  csv << "# metric=" << metric << " bands=" << series->cols()
      << " frames=" << series->rows() << " tool_version=" << paqm::kVersion << "\n"
      << "# config " << config.to_json().dump() << "\n";
  for (std::size_t b = 0; b < series->cols(); ++b) {
    for (std::size_t n = 0; n < series->rows(); ++n) {
      if (n) csv << ",";
      csv << (*series)(n, b);
    }
    csv << "\n";
  }
  write_text_atomic(out_path, csv.str());

  if (!image_path.empty()) {
    double lo = (*series)(0, 0), hi = lo;
    for (double v : series->data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double range = hi > lo ? hi - lo : 1.0;
    std::ostringstream pgm;
    pgm << "P2\n" << series->rows() << " " << series->cols() << "\n255\n";
    // Top image row = highest band.
    for (std::size_t b = series->cols(); b-- > 0;) {
      for (std::size_t n = 0; n < series->rows(); ++n) {
        const int gray =
            static_cast<int>(std::lround(255.0 * ((*series)(n, b) - lo) / range));
        pgm << gray << (n + 1 < series->rows() ? " " : "\n");
      }
    }
    write_text_atomic(image_path, pgm.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-reference perceptual audio quality measurement"};
  app.set_version_flag("--version", paqm::kVersion);
  app.require_subcommand(1);

  CommonOptions common;

  auto* compare = app.add_subcommand("compare", "Measure one REF/SUT pair");
  std::string ref_path, sut_path, model_path, out_path;
  bool as_json = false;
  compare->add_option("ref", ref_path, "Reference WAV")->required();
  compare->add_option("sut", sut_path, "System-under-test WAV")->required();
  compare->add_option("--model", model_path, "Trained mapping model (enables BAQ)");
  compare->add_option("-o,--output", out_path, "Write JSON report to file");
  compare->add_flag("--json", as_json, "Machine-readable output");
  add_common(compare, common);

  auto* analyze = app.add_subcommand("analyze-interactions",
                                     "CEM-DM salience interaction analysis");
  std::string manifest_path, out_base;
  double threshold = -1.0;
  analyze->add_option("manifest", manifest_path, "Listening-test manifest CSV")->required();
  analyze->add_option("-o,--output", out_base, "Output base name (.csv/.json)")->required();
  analyze->add_option("--threshold", threshold, "Selection threshold on |r|");
  add_common(analyze, common);

  auto* train = app.add_subcommand("train", "Train the salience mapping model");
  std::string interactions_path, out_model;
  train->add_option("manifest", manifest_path, "Training manifest CSV")->required();
  train->add_option("interactions", interactions_path,
                    "Interactions JSON from analyze-interactions")->required();
  train->add_option("-o,--output", out_model, "Model output path")->required();
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Validate a model against a manifest");
  std::string eval_model, report_path;
  bool pool_conditions = false;
  evaluate->add_option("manifest", manifest_path, "Evaluation manifest CSV")->required();
  evaluate->add_option("model", eval_model, "Trained model JSON")->required();
  evaluate->add_option("-o,--output", report_path, "Write JSON report to file");
  evaluate->add_flag("--pool-conditions", pool_conditions,
                     "Correlate per-condition means instead of per-item scores");
  add_common(evaluate, common);

  auto* heatmap = app.add_subcommand("export-heatmap", "Export a metric's T/F matrix");
  std::string metric = "bvar", image_path;
  heatmap->add_option("ref", ref_path, "Reference WAV")->required();
  heatmap->add_option("sut", sut_path, "System-under-test WAV")->required();
  heatmap->add_option("--metric", metric, "ehs|pdev|bvar|ps|nprime")->required();
  heatmap->add_option("-o,--output", out_path, "CSV output path")->required();
  heatmap->add_option("--image", image_path, "Also write a min-max normalized PGM");
  add_common(heatmap, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(compare)) {
      return cmd_compare(ref_path, sut_path, model_path, out_path, as_json, common);
    }
    if (app.got_subcommand(analyze)) {
      return cmd_analyze_interactions(manifest_path, out_base, threshold, common);
    }
    if (app.got_subcommand(train)) {
      return cmd_train(manifest_path, interactions_path, out_model, common);
    }
    if (app.got_subcommand(evaluate)) {
      return cmd_evaluate(manifest_path, eval_model, report_path, pool_conditions,
                          common);
    }
    if (app.got_subcommand(heatmap)) {
      return cmd_export_heatmap(ref_path, sut_path, metric, out_path, image_path,
                                common);
    }
  } catch (const paqm::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const paqm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
