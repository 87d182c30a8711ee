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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "paqm/errors.h"
#include "paqm/salience.h"
#include "paqm/stats.h"
#include "test_support.h"

using namespace paqm;
using test::TempDir;

namespace {

// The forward generator used across these tests: three DMs with known
// monotone effects, optionally one suppressing gate driven by cem[2].
struct SyntheticDb {
  std::vector<ItemFeatures> items;
  std::vector<double> gate_z;  // latent standardized gate variable
};

SyntheticDb make_db(std::size_t n, unsigned seed, double gate_lambda,
                    double score_noise) {
  SyntheticDb db;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    ItemFeatures item;
    item.item_id = "item" + std::to_string(i);
    const double rms = 3.0 * u01(rng);
    const double nmr = -30.0 + 30.0 * u01(rng);
    const double ehs = u01(rng);
    item.dm = {rms, nmr, ehs};
    const double z = std::clamp(normal(rng), -2.0, 2.0);
    db.gate_z.push_back(z);
    item.cem = {1.0 + 0.2 * normal(rng), std::abs(normal(rng)),
                0.02 + 0.01 * z};
    const double gate = std::clamp(1.0 + gate_lambda * z, 0.0, 2.0);
    const double deg = 8.0 * rms + 0.8 * (nmr + 30.0) + gate * 30.0 * ehs;
    item.subjective_score =
        std::clamp(100.0 - deg + score_noise * normal(rng), 0.0, 100.0);
    db.items.push_back(std::move(item));
  }
  return db;
}

}  // namespace

TEST_CASE("salience corrections: proportional residual attribution") {
  // Observed 50, predicted 40 -> shared multiplicative correction 1.25.
  const std::vector<double> contributions = {20.0, 20.0};
  const std::vector<double> c = salience_corrections(50.0, contributions, 1.0);
  CHECK(c[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(1.25).epsilon(1e-12));

  const std::vector<double> with_small = {20.0, 0.5};
  const std::vector<double> c2 = salience_corrections(30.75, with_small, 1.0);
  CHECK(c2[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::isnan(c2[1]));
}

TEST_CASE("zero-residual DB yields salience one") {
  // Scores generated exactly from the additive model, no gate, no noise.
  const SyntheticDb db = make_db(80, 1, 0.0, 0.0);
  const SalienceTargets targets = compute_salience_targets(db.items);
  std::size_t defined = 0;
  for (std::size_t i = 0; i < targets.values.rows(); ++i) {
    for (std::size_t d = 0; d < targets.values.cols(); ++d) {
      if (targets.defined(i, d) > 0.0) {
        ++defined;
        CHECK(targets.values(i, d) == doctest::Approx(1.0).epsilon(5e-2));
      }
    }
  }
  CHECK(defined > 100);
}

TEST_CASE("recovered salience tracks a known gate variable") {
  const SyntheticDb db = make_db(250, 2, -0.45, 1.0);
  const SalienceTargets targets = compute_salience_targets(db.items);
  std::vector<double> x, y;
  const std::size_t ehs_index = 2;
  for (std::size_t i = 0; i < db.items.size(); ++i) {
    if (targets.defined(i, ehs_index) > 0.0) {
      x.push_back(db.gate_z[i]);
      y.push_back(targets.values(i, ehs_index));
    }
  }
  REQUIRE(x.size() >= 50);
  const PearsonResult p = pearson_with_ci(x, y);
  CHECK(std::abs(p.r) > 0.9);
  CHECK(p.r < 0.0);
}

TEST_CASE("salience target preconditions") {
  SyntheticDb small = make_db(10, 3, 0.0, 0.0);
  CHECK_THROWS_AS(compute_salience_targets(small.items), std::invalid_argument);

  SyntheticDb flat = make_db(40, 4, 0.0, 0.0);
  for (auto& item : flat.items) {
    item.subjective_score = 50.0;
  }
  CHECK_THROWS_WITH_AS(compute_salience_targets(flat.items),
                       doctest::Contains("constant scores"), std::invalid_argument);

  SyntheticDb deg = make_db(40, 5, 0.0, 0.0);
  for (auto& item : deg.items) {
    item.dm[0] = 1.0;
    item.dm[2] = 0.5;
  }
  CHECK_THROWS_AS(compute_salience_targets(deg.items), std::invalid_argument);

  SyntheticDb under = make_db(21, 6, 0.0, 0.0);
  SalienceOptions options;
  options.knot_count = 9;  // 3 DMs x 8 increments > 21 items
  CHECK_THROWS_WITH_AS(compute_salience_targets(under.items, options),
                       doctest::Contains("underdetermined"), std::invalid_argument);
}

TEST_CASE("correlation table: exact +1/-1 and the CI machinery") {
  const std::size_t n = 40;
  SalienceTargets targets;
  targets.values = Matrix(n, 2);
  targets.defined = Matrix(n, 2, 1.0);
  std::vector<ItemFeatures> items(n);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = u01(rng);
    targets.values(i, 0) = v;
    targets.values(i, 1) = 2.0 - v;
    items[i].dm = {0.0, 0.0};
    items[i].cem = {v};
    items[i].subjective_score = 50.0;
  }
  const InteractionTable table =
      correlate_interactions(targets, items, {"C0"}, {"D0", "D1"});
  CHECK(table.r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.r(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(table.pair_count(0, 0) == n);
  CHECK(table.ci_low(0, 0) <= table.r(0, 0));
  CHECK(table.ci_high(0, 1) >= table.r(0, 1));
}

TEST_CASE("correlation table rejects sparse cells and constant columns") {
  const std::size_t n = 30;
  SalienceTargets targets;
  targets.values = Matrix(n, 1, 1.0);
  targets.defined = Matrix(n, 1, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    targets.defined(i, 0) = 1.0;
  }
  std::vector<ItemFeatures> items(n);
  for (std::size_t i = 0; i < n; ++i) {
    items[i].cem = {static_cast<double>(i)};
    items[i].dm = {0.0};
  }
  CHECK_THROWS_WITH_AS(correlate_interactions(targets, items, {"C0"}, {"D0"}),
                       doctest::Contains("fewer than 10"), std::invalid_argument);

  for (std::size_t i = 0; i < n; ++i) {
    targets.defined(i, 0) = 1.0;  // defined, but constant target
  }
  CHECK_THROWS_WITH_AS(correlate_interactions(targets, items, {"C0"}, {"D0"}),
                       doctest::Contains("constant"), std::invalid_argument);
}

TEST_CASE("selection reproduces the published partition at threshold 0.6") {
  InteractionTable table;
  table.cem_names = kDefaultCemNames;
  table.dm_names = kDefaultDmNames;
  table.r = Matrix(3, 3);
  // Measured correlation matrix: rows PS, PDEV, BVAR; columns
  // RmsNoiseLoud, SegmentalNMR, EHS.
  const double values[3][3] = {{0.5, 0.4, 0.73},
                               {-0.44, -0.67, -0.60},
                               {-0.34, -0.73, -0.85}};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t d = 0; d < 3; ++d) {
      table.r(c, d) = values[c][d];
    }
  }
  const std::vector<Interaction> selected = select_interactions(table, 0.6);
  REQUIRE(selected.size() == 5);
  auto has = [&](std::size_t c, std::size_t d, int sign) {
    return std::any_of(selected.begin(), selected.end(), [&](const Interaction& s) {
      return s.cem_index == c && s.dm_index == d && s.sign == sign;
    });
  };
  CHECK(has(0, 2, +1));  // PS-EHS 0.73
  CHECK(has(1, 1, -1));  // PDEV-SegmentalNMR -0.67
  CHECK(has(1, 2, -1));  // PDEV-EHS -0.60
  CHECK(has(2, 1, -1));  // BVAR-SegmentalNMR -0.73
  CHECK(has(2, 2, -1));  // BVAR-EHS -0.85
  CHECK_FALSE(has(0, 0, +1));  // 0.5 excluded
  CHECK_FALSE(has(2, 0, -1));  // -0.34 excluded

  // Deterministic output order: CEM-major, DM-minor.
  const std::vector<Interaction> again = select_interactions(table, 0.6);
  REQUIRE(again.size() == selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    CHECK(again[i].cem_index == selected[i].cem_index);
    CHECK(again[i].dm_index == selected[i].dm_index);
  }

  CHECK(select_interactions(table, 1.1).empty());
}

TEST_CASE("training without interactions reduces to the additive map") {
  const SyntheticDb db = make_db(120, 7, 0.0, 0.0);
  const SalienceMappingModel model = train_mapping(db.items, {});
  CHECK(model.gates.empty());
  CHECK(model.trained);
  CHECK(model.train_rmse < 1.0);

  // Gates are identically one: prediction equals 100 - sum of bases.
  const std::vector<double> dm = {1.5, -15.0, 0.5};
  const std::vector<double> cem = {1.0, 0.5, 0.02};
  double expected = 100.0;
  for (std::size_t d = 0; d < 3; ++d) {
    expected -= model.bases[d](dm[d]);
  }
  CHECK(predict_baq(model, dm, cem) ==
        doctest::Approx(std::clamp(expected, 0.0, 100.0)).epsilon(1e-12));
}

TEST_CASE("single active DM with linear law recovers the slope") {
  std::vector<ItemFeatures> items;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < 60; ++i) {
    ItemFeatures item;
    const double x = 30.0 * u01(rng);
    const double y = u01(rng);  // second DM present but inert
    item.dm = {x, y, 0.0};
    item.cem = {0.0, 0.0, 0.0};
    item.subjective_score = 100.0 - 2.0 * x;
    items.push_back(item);
  }
  const SalienceMappingModel model = train_mapping(items, {});
  CHECK(model.train_rmse < 1e-6);
  for (double x : {5.0, 12.0, 25.0}) {
    CHECK(model.bases[0](x) == doctest::Approx(2.0 * x).epsilon(0.01));
  }
}

TEST_CASE("training recovers a generating model within 1 MUSHRA point") {
  const SyntheticDb db = make_db(200, 8, -0.45, 0.0);
  const std::vector<Interaction> selected = {{2, 2, -1, -0.8}};
  const SalienceMappingModel model = train_mapping(db.items, selected);
  CHECK(model.converged);

  double sse = 0.0;
  for (const auto& item : db.items) {
    const double pred = predict_baq(model, item.dm, item.cem);
    sse += (pred - item.subjective_score) * (pred - item.subjective_score);
  }
  CHECK(std::sqrt(sse / db.items.size()) < 1.0);
  REQUIRE(model.gates.size() == 1);
  CHECK(model.gates[0].lambda < 0.0);
}

TEST_CASE("train/predict round trip matches the stored objective") {
  const SyntheticDb db = make_db(100, 9, -0.3, 2.0);
  const std::vector<Interaction> selected = {{2, 2, -1, -0.7}};
  const SalienceMappingModel model = train_mapping(db.items, selected);
  double sse = 0.0;
  for (const auto& item : db.items) {
    const double pred = predict_baq(model, item.dm, item.cem);
    sse += (pred - item.subjective_score) * (pred - item.subjective_score);
  }
  CHECK(std::sqrt(sse / db.items.size()) ==
        doctest::Approx(model.train_rmse).epsilon(1e-9));
}

TEST_CASE("retraining on own predictions reproduces them within 0.1 RMSE") {
  const SyntheticDb db = make_db(150, 10, -0.4, 2.0);
  const std::vector<Interaction> selected = {{2, 2, -1, -0.7}};
  const SalienceMappingModel first = train_mapping(db.items, selected);

  std::vector<ItemFeatures> refit_items = db.items;
  for (auto& item : refit_items) {
    item.subjective_score = predict_baq(first, item.dm, item.cem);
  }
  const SalienceMappingModel second = train_mapping(refit_items, selected);
  double sse = 0.0;
  for (std::size_t i = 0; i < refit_items.size(); ++i) {
    const double a = predict_baq(first, db.items[i].dm, db.items[i].cem);
    const double b = predict_baq(second, db.items[i].dm, db.items[i].cem);
    sse += (a - b) * (a - b);
  }
  CHECK(std::sqrt(sse / refit_items.size()) < 0.1);
}

TEST_CASE("prediction is monotone non-increasing in each DM with fixed gates") {
  const SyntheticDb db = make_db(100, 11, 0.0, 1.0);
  const SalienceMappingModel model = train_mapping(db.items, {});
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::vector<double> cem = {1.0, 0.5, 0.02};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> dm = {3.0 * u01(rng), -30.0 + 30.0 * u01(rng), u01(rng)};
    for (std::size_t d = 0; d < 3; ++d) {
      std::vector<double> bumped = dm;
      bumped[d] += 0.05 * (d == 1 ? 30.0 : (d == 0 ? 3.0 : 1.0));
      CHECK(predict_baq(model, bumped, cem) <= predict_baq(model, dm, cem) + 1e-12);
    }
  }
}

TEST_CASE("suppressing gate never increases degradation as the CEM grows") {
  const SyntheticDb db = make_db(200, 12, -0.45, 1.0);
  const std::vector<Interaction> selected = {{2, 2, -1, -0.8}};
  const SalienceMappingModel model = train_mapping(db.items, selected);
  REQUIRE(model.gates.size() == 1);
  REQUIRE(model.gates[0].lambda <= 0.0);

  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> dm = {3.0 * u01(rng), -30.0 + 30.0 * u01(rng), u01(rng)};
    std::vector<double> cem = {1.0, 0.5, 0.01 + 0.03 * u01(rng)};
    std::vector<double> cem_hi = cem;
    cem_hi[2] += 0.005;
    // Larger IM effect -> smaller predicted degradation -> BAQ not lower.
    CHECK(predict_baq(model, dm, cem_hi) >= predict_baq(model, dm, cem) - 1e-12);
  }
}

TEST_CASE("model JSON round trip preserves predictions; version is checked") {
  TempDir dir("model_json");
  const SyntheticDb db = make_db(80, 13, -0.4, 1.0);
  const std::vector<Interaction> selected = {{2, 2, -1, -0.8}};
  const SalienceMappingModel model = train_mapping(db.items, selected);
  save_model(model, dir.file("m.json"));
  const SalienceMappingModel loaded = load_model(dir.file("m.json"));
  for (const auto& item : db.items) {
    CHECK(predict_baq(loaded, item.dm, item.cem) ==
          predict_baq(model, item.dm, item.cem));
  }

  // Determinism: identical bytes on re-save.
  save_model(model, dir.file("m2.json"));
  std::ifstream f1(dir.file("m.json")), f2(dir.file("m2.json"));
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);

  // Version tag validation.
  std::string tampered = s1;
  const auto pos = tampered.find(kModelFormatVersion);
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, std::string(kModelFormatVersion).size(), "paqm-model/999");
  std::ofstream(dir.file("bad.json")) << tampered;
  CHECK_THROWS_AS(load_model(dir.file("bad.json")), FormatError);

  std::ofstream(dir.file("corrupt.json")) << "{ not json";
  CHECK_THROWS_AS(load_model(dir.file("corrupt.json")), FormatError);
  CHECK_THROWS_AS(load_model(dir.file("missing.json")), IoError);
}

TEST_CASE("predicting with an untrained model fails") {
  SalienceMappingModel model;
  const std::vector<double> dm(3, 0.0), cem(3, 0.0);
  CHECK_THROWS_AS(predict_baq(model, dm, cem), PipelineError);
}

TEST_CASE("training requires 30 items") {
  const SyntheticDb db = make_db(20, 14, 0.0, 0.0);
  CHECK_THROWS_AS(train_mapping(db.items, {}), std::invalid_argument);
}
