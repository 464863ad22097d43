/*
 * Copyright 2026 The surveyshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "surveyshap/analysis.h"
#include "surveyshap/pipeline.h"
#include "surveyshap/treeshap.h"
#include "test_support.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace surveyshap;
using namespace surveyshap::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("surveyshap_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Numeric CSV columns by header name.
std::map<std::string, std::vector<double>> read_table(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t j = 0; std::getline(ss, cell, ',') && j < header.size(); ++j) {
      cols[header[j]].push_back(std::stod(cell));
    }
  }
  return cols;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Hyperparams hp(int trees, double lr, int leaves, int min_leaf) {
  Hyperparams h;
  h.num_trees = trees;
  h.learning_rate = lr;
  h.max_leaves = leaves;
  h.min_samples_leaf = min_leaf;
  return h;
}

// `total` survey rows: `blue` blue-collar, then `white` white-collar, the rest not working.
Dataset counts_dataset(std::size_t total, std::size_t blue, std::size_t white) {
  std::vector<Sample> s;
  s.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const Occupation o = i < blue           ? Occupation::kBlue
                         : i < blue + white ? Occupation::kWhite
                                            : Occupation::kUnemployed;
    s.push_back(survey_sample(i, o));
  }
  return Dataset(FeatureSchema::survey(), std::move(s));
}

Outcome local_accuracy() {
  auto spec = GeneratorSpec::defaults();
  spec.n = 1000;
  spec.seed = 101;
  const Dataset ds = generate(spec);
  const TreeEnsemble model = train(ds, Experiment::kWork, Hyperparams{});
  const auto t0 = std::chrono::steady_clock::now();
  const ShapMatrix m = shap_values(model, ds);
  const double err = max_local_accuracy_error(model, ds, m);
  const double secs = seconds_since(t0);
  return {err <= 1e-6 && secs < 10.0,
          "max relative error " + fmt("%.3g", err) + " over 1000 samples, " +
              fmt("%.2f", secs) + " s"};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  double shap_gap = 0, inter_gap = 0;
  for (int c = 0; c < 500; ++c) {
    const auto m = 2 + rng.below(11);  // 2..12 features
    const FeatureSchema schema = mixed_schema(m);
    const auto model = random_ensemble(schema, rng, 1 + static_cast<int>(rng.below(10)),
                                       1 + static_cast<int>(rng.below(4)));
    const auto x = random_row(schema, rng);
    const auto fast = shap_for_input(model, x);
    const auto slow = shap_brute_force(model, x);
    for (std::size_t j = 0; j < m; ++j) shap_gap = std::max(shap_gap, std::abs(fast[j] - slow[j]));
  }
  for (int c = 0; c < 100; ++c) {
    const auto m = 2 + rng.below(9);  // 2..10 features
    const FeatureSchema schema = mixed_schema(m);
    const auto model = random_ensemble(schema, rng, 1 + static_cast<int>(rng.below(10)),
                                       1 + static_cast<int>(rng.below(4)));
    const auto x = random_row(schema, rng);
    const auto fast = interactions_for_input(model, x);
    const auto slow = interaction_brute_force(model, x);
    for (std::size_t j = 0; j < m * m; ++j) {
      inter_gap = std::max(inter_gap, std::abs(fast[j] - slow[j]));
    }
  }
  const double secs = seconds_since(t0);
  return {shap_gap <= 1e-8 && inter_gap <= 1e-8 && secs < 120.0,
          "max |SHAP - brute| " + fmt("%.3g", shap_gap) + " (500 cases), max |interaction - "
              "brute| " + fmt("%.3g", inter_gap) + " (100 cases), " + fmt("%.2f", secs) + " s"};
}

Outcome interaction_identities() {
  auto spec = GeneratorSpec::defaults();
  spec.n = 2000;
  spec.seed = 303;
  const Dataset ds = generate(spec);
  const TreeEnsemble model = train(ds, Experiment::kWork, hp(60, 0.1, 15, 20));
  const Dataset sub = weighted_subsample(ds, 200, 7);
  const InteractionTensor t = interaction_values(model, sub);
  const ShapMatrix phi = shap_values(model, sub);
  const std::size_t m = t.num_features;
  std::size_t asym = 0;
  double row_gap = 0;
  for (std::size_t i = 0; i < t.num_samples; ++i) {
    const double* mat = &t.values[i * m * m];
    for (std::size_t j = 0; j < m; ++j) {
      double sum = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (mat[j * m + k] != mat[k * m + j]) ++asym;
        sum += mat[j * m + k];
      }
      row_gap = std::max(row_gap, std::abs(sum - phi.values[i * m + j]));
    }
  }

  // Additive model: every tree splits on a single feature.
  Rng rng(304);
  const FeatureSchema schema = numeric_schema(6);
  std::vector<Tree> trees;
  for (int k = 0; k < 12; ++k) {
    trees.push_back(stump(k % 6, 10 * rng.uniform(), rng.normal(), rng.normal(),
                          1 + 9 * rng.uniform(), 1 + 9 * rng.uniform()));
  }
  const TreeEnsemble additive(schema, 0.1, std::move(trees));
  std::size_t off = 0;
  for (int s = 0; s < 200; ++s) {
    const auto x = random_row(schema, rng);
    const auto mat = interactions_for_input(additive, x);
    for (std::size_t j = 0; j < 6; ++j) {
      for (std::size_t k = 0; k < 6; ++k) {
        if (j != k && mat[j * 6 + k] != 0.0) ++off;
      }
    }
  }
  return {asym == 0 && row_gap <= 1e-6 && off == 0,
          std::to_string(asym) + " asymmetric entries, max |row sum - phi| " +
              fmt("%.3g", row_gap) + ", " + std::to_string(off) +
              " non-zero additive off-diagonals (200 + 200 samples)"};
}

Outcome table_arithmetic() {
  // Survey totals: 81,816 respondents, 23,141 blue-collar and 4,733 white-collar.
  const Dataset survey = counts_dataset(81816, 23141, 4733);
  const double work = class_balance(survey, Experiment::kWork);
  const double blue = class_balance(survey, Experiment::kBlue);
  const double white = class_balance(survey, Experiment::kWhite);
  const double scst = class_balance(counts_dataset(30502, 13022, 0), Experiment::kWork);
  const double general = class_balance(counts_dataset(18387, 4409, 0), Experiment::kWork);
  auto r3 = [](double v) { return std::round(v * 1000) / 1000; };
  const bool ok = r3(work) == 0.341 && r3(blue) == 0.283 && r3(white) == 0.058 &&
                  r3(scst) == 0.427 && r3(general) == 0.240;
  return {ok, "work " + fmt("%.4f", work) + ", blue " + fmt("%.4f", blue) + ", white " +
                  fmt("%.4f", white) + ", Sc/St working " + fmt("%.4f", scst) +
                  ", general working " + fmt("%.4f", general)};
}

Outcome planted_trend() {
  // Work status through the pipeline: cohort curve of caste_scst against age.
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = scratch("planted");
  json doc = {{"input", {{"generator", {{"n", 50000}}}}},
              {"experiments", {"work"}},
              {"split", {{"folds", 2}}},
              {"grid", {Hyperparams{}.to_json()}},
              {"interaction_subsample", 2000},
              {"output_dir", out.string()},
              {"seed", 505}};
  run(RunConfig::from_json(doc));
  const auto curve = read_table(out / "tables/work_cohort_curve.csv");
  const double rho = spearman(curve.at("age"), curve.at("mean_abs_shap")).rho;
  const double pipeline_secs = seconds_since(t0);

  // White collar: the caste x age interaction for Sc/St respondents is
  // positive among the young and negative among the old.
  int correct = 0;
  double slowest = 0;
  for (int r = 0; r < 20; ++r) {
    const auto t1 = std::chrono::steady_clock::now();
    auto spec = GeneratorSpec::defaults();
    spec.n = 50000;
    spec.seed = derive_seed(606, static_cast<std::uint64_t>(r));
    const Dataset ds = generate(spec);
    const TreeEnsemble model = train(ds, Experiment::kWhite, hp(100, 0.1, 15, 50));
    const std::size_t age = ds.schema().index_of("age");
    const std::size_t scst = ds.schema().index_of("caste_scst");
    double young = 0, old = 0;
    std::size_t n_young = 0, n_old = 0;
    for (const auto& s : ds.samples()) {
      if (s.features[scst] != 1.0) continue;
      const double a = s.features[age];
      if (a > 30 && a < 40) continue;
      if ((a <= 30 ? n_young : n_old) >= 1500) continue;
      const double v = interaction_row(model, s.features, scst)[age];
      if (a <= 30) {
        young += v;
        ++n_young;
      } else {
        old += v;
        ++n_old;
      }
    }
    if (young / n_young > 0 && old / n_old < 0) ++correct;
    slowest = std::max(slowest, seconds_since(t1));
  }
  return {rho > 0.8 && correct >= 19 && pipeline_secs < 300 && slowest < 300,
          "work cohort-curve Spearman with age " + fmt("%.3f", rho) + " (run " +
              fmt("%.1f", pipeline_secs) + " s); white-collar signs correct in " +
              std::to_string(correct) + "/20 runs (slowest " + fmt("%.1f", slowest) + " s)"};
}

Outcome training_properties() {
  bool monotone = true;
  double worst_rise = 0;
  for (int d = 0; d < 10; ++d) {
    const Dataset ds = labelled_dataset(
        600, 5, 700 + d,
        [](const std::vector<double>& x, Rng& rng) {
          return x[0] + 0.5 * x[1] * (x[2] > 5) + 2 * rng.normal() > 6;
        },
        true);
    TrainingTrace trace;
    train(ds, Experiment::kBlue, hp(40, 0.3, 15, 3), 0, &trace);
    for (std::size_t t = 1; t < trace.log_loss.size(); ++t) {
      const double rise = trace.log_loss[t] - trace.log_loss[t - 1];
      worst_rise = std::max(worst_rise, rise);
      if (rise > 0) monotone = false;
    }
  }

  // Integer weights versus explicit copies.
  const Dataset base = labelled_dataset(300, 4, 710, [](const std::vector<double>& x, Rng& rng) {
    return x[0] + x[1] + 3 * rng.normal() > 10;
  });
  Rng rng(711);
  std::vector<Sample> weighted, copied;
  for (const auto& s : base.samples()) {
    const int k = 1 + static_cast<int>(rng.below(3));
    Sample w = s;
    w.weight = k;
    weighted.push_back(w);
    for (int c = 0; c < k; ++c) {
      Sample d = s;
      d.id = copied.size();
      copied.push_back(d);
    }
  }
  const Hyperparams h = hp(30, 0.2, 15, 4);
  const bool equivalent =
      model_to_json(train(Dataset(base.schema(), weighted), Experiment::kBlue, h)).dump() ==
      model_to_json(train(Dataset(base.schema(), copied), Experiment::kBlue, h)).dump();

  const Dataset separable = labelled_dataset(
      500, 3, 720, [](const std::vector<double>& x, Rng&) { return x[0] > 5; });
  const double acc =
      evaluate(train(separable, Experiment::kBlue, hp(20, 0.5, 7, 1)), separable,
               Experiment::kBlue)
          .accuracy;
  return {monotone && equivalent && acc == 1.0,
          std::string("log-loss ") + (monotone ? "non-increasing" : "increased") +
              " on 10 datasets (largest step " + fmt("%.3g", worst_rise) + "), weight/copy " +
              (equivalent ? "identical" : "different") + ", separable accuracy " +
              fmt("%.4f", acc)};
}

Outcome split_guarantees() {
  auto spec = GeneratorSpec::defaults();
  spec.n = 10000;
  double worst = 0;
  bool folds_ok = true;
  for (std::uint64_t s = 0; s < 100; ++s) {
    spec.seed = 800 + s;
    const Dataset ds = generate(spec);
    const Experiment e = static_cast<Experiment>(s % 3);
    SplitSpec split;
    split.seed = s;
    split.test_fraction = 0.2;
    const auto tt = stratified_split(ds, e, split);
    worst = std::max(worst, std::abs(class_balance(tt.train, e) - class_balance(ds, e)));

    const auto folds = kfold(tt.train, e, split);
    std::multiset<std::uint64_t> valid_ids;
    for (const auto& f : folds) {
      std::set<std::uint64_t> train_ids;
      for (const auto& x : f.train.samples()) train_ids.insert(x.id);
      for (const auto& x : f.valid.samples()) {
        valid_ids.insert(x.id);
        if (train_ids.count(x.id)) folds_ok = false;
      }
      if (f.train.size() + f.valid.size() != tt.train.size()) folds_ok = false;
    }
    std::multiset<std::uint64_t> all;
    for (const auto& x : tt.train.samples()) all.insert(x.id);
    if (valid_ids != all) folds_ok = false;
  }
  return {worst < 0.005 && folds_ok,
          "max |balance(train) - balance(full)| " + fmt("%.2e", worst) +
              " over 100 seeds, folds " + (folds_ok ? "disjoint and covering" : "BROKEN")};
}

Outcome spearman_units() {
  Rng rng(909);
  bool ok = true;
  for (int c = 0; c < 100; ++c) {
    std::vector<double> x(200), y(200);
    for (auto& v : x) v = rng.uniform();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + rng.normal();
    std::vector<double> neg(x.size()), cube(x.size()), ex(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      neg[i] = -x[i];
      cube[i] = x[i] * x[i] * x[i];
      ex[i] = std::exp(3 * x[i]);
    }
    const double base = spearman(x, y).rho;
    ok = ok && spearman(x, x).rho == 1.0 && spearman(x, neg).rho == -1.0 &&
         spearman(cube, y).rho == base && spearman(ex, y).rho == base;
  }
  return {ok, std::string("self 1, reversal -1, monotone invariance on 100 columns ") +
                  (ok ? "exact" : "VIOLATED")};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SURVEYSHAP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> csv_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".csv") {
      out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
  }
  return out;
}

Outcome determinism() {
  const fs::path root = scratch("determinism");
  const json doc = {{"input", {{"generator", {{"n", 3000}}}}},
                    {"split", {{"folds", 3}}},
                    {"grid",
                     {hp(30, 0.1, 15, 20).to_json(), hp(20, 0.2, 7, 20).to_json()}},
                    {"interaction_subsample", 300},
                    {"bootstrap", {{"count", 3}}},
                    {"seed", 42}};
  std::ofstream(root / "config.json") << doc.dump(2);
  const std::string cfg = (root / "config.json").string();
  const int a = cli("run --config " + cfg + " --threads 1 --out " + (root / "a").string());
  const int b = cli("run --config " + cfg + " --threads 3 --out " + (root / "b").string());
  if (a != 0 || b != 0) return {false, "run exited with " + std::to_string(a) + "/" + std::to_string(b)};
  const auto ta = csv_tree(root / "a");
  const auto tb = csv_tree(root / "b");
  std::size_t differing = 0;
  for (const auto& [k, v] : ta) {
    if (!tb.count(k) || tb.at(k) != v) ++differing;
  }
  return {ta.size() > 10 && ta.size() == tb.size() && differing == 0,
          std::to_string(ta.size()) + " CSV files, " + std::to_string(differing) +
              " differ between 1 and 3 threads"};
}

Outcome robustness() {
  const fs::path out = scratch("robustness");
  json doc = {{"input", {{"generator", {{"n", 20000}}}}},
              {"experiments", {"work"}},
              {"split", {{"folds", 2}}},
              {"grid", {Hyperparams{}.to_json()}},
              {"interaction_subsample", 500},
              {"bootstrap", {{"count", 5}, {"fraction", 0.8}}},
              {"output_dir", out.string()},
              {"seed", 1010}};
  run(RunConfig::from_json(doc));
  const auto table = read_table(out / "tables/work_robustness.csv");
  const auto& rho = table.at("spearman");
  double mean = 0;
  for (double r : rho) mean += r;
  mean /= static_cast<double>(rho.size());
  return {rho.size() == 10 && mean > 0.7,
          "mean pairwise cohort-curve Spearman " + fmt("%.3f", mean) + " over " +
              std::to_string(rho.size()) + " pairs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"local accuracy", local_accuracy},
      {"oracle equivalence", oracle_equivalence},
      {"interaction identities", interaction_identities},
      {"table arithmetic", table_arithmetic},
      {"planted trend recovery", planted_trend},
      {"gbdt training", training_properties},
      {"split and fold guarantees", split_guarantees},
      {"spearman unit checks", spearman_units},
      {"determinism", determinism},
      {"bootstrap robustness", robustness},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << " ("
              << criteria[i].first << "): " << o.detail << " [" << fmt("%.1f", seconds_since(t0))
              << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
