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

// Histogram gradient boosting for weighted binary classification with the
// logistic loss. Trees grow leaf-wise; numeric features split on quantile bin
// boundaries, categorical features on gradient-ordered category prefixes.

#ifndef SURVEYSHAP_GBDT_H_
#define SURVEYSHAP_GBDT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surveyshap/common.h"
#include "surveyshap/dataset.h"

namespace surveyshap {

struct Hyperparams {
  int num_trees = 100;
  double learning_rate = 0.1;
  int max_leaves = 31;
  // Minimum weighted cover (sum of survey weights) of every leaf.
  int min_samples_leaf = 20;
  double l2_lambda = 1.0;
  int max_bins = 255;

  void validate() const;
  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& doc);

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// learning_rate {0.05, 0.1} x max_leaves {15, 31, 63} x num_trees {100, 200}
// x min_samples_leaf {20, 50}.
std::vector<Hyperparams> default_grid();

struct TreeNode {
  // -1 marks a leaf.
  int feature = -1;
  // Numeric and binary splits: x <= threshold goes left.
  double threshold = 0.0;
  // Categorical splits: sorted codes routed left; every other code goes right.
  std::vector<int> left_categories;
  int left = -1;
  int right = -1;
  // Leaf output in log-odds.
  double value = 0.0;
  // Weighted training count reaching the node.
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool is_categorical() const { return !left_categories.empty(); }
  bool goes_left(double x) const;
};

// Nodes in a flat array; the root is nodes[0] and children always follow
// their parent.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int num_leaves() const;
  int max_depth() const;
};

class TreeEnsemble {
 public:
  // Validates structure: child links, positive covers, cover conservation
  // (relative 1e-9), finite leaf values.
  TreeEnsemble(FeatureSchema schema, double base_score, std::vector<Tree> trees,
               Hyperparams hyperparams = {});

  const FeatureSchema& schema() const { return schema_; }
  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const Hyperparams& hyperparams() const { return hyperparams_; }

  // base_score + sum of routed leaf values. No input validation.
  double margin(std::span<const double> x) const;

 private:
  FeatureSchema schema_;
  double base_score_;
  std::vector<Tree> trees_;
  Hyperparams hyperparams_;
};

// ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)]
double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda);
// −learning_rate · G / (H + λ)
double leaf_output(double grad, double hess, double lambda,
                   double learning_rate);

struct TrainingTrace {
  // Weighted mean log-loss before the first round and after every round.
  std::vector<double> log_loss;
};

// Fits one tree per round to g = w(p − y), h = w·p(1 − p). Rows with identical
// features and label are merged into one row carrying the summed weight, so
// k unit-weight copies and one weight-k copy give the same ensemble bit for
// bit. Training has no random component; `seed` is accepted for interface
// symmetry with the sampling stages.
TreeEnsemble train(const Dataset& ds, Experiment e, const Hyperparams& hp,
                   std::uint64_t seed = 0, TrainingTrace* trace = nullptr);

// Validates x against the schema (size, categorical codes), then margin().
double predict_margin(const TreeEnsemble& model, std::span<const double> x);
// sigmoid(margin) clamped to [1e-15, 1 - 1e-15].
double predict_proba(const TreeEnsemble& model, std::span<const double> x);
double probability_from_margin(double margin);

double weighted_log_loss(const TreeEnsemble& model, const Dataset& ds,
                         Experiment e);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double class_balance = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
};

Metrics metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn,
                               std::size_t tn);
Metrics evaluate(const TreeEnsemble& model, const Dataset& ds, Experiment e,
                 double threshold = 0.5);

struct CvRow {
  Hyperparams hyperparams;
  double mean_f1 = 0.0;
  std::vector<double> fold_f1;
  // Non-empty when training failed for this grid point.
  std::string error;
  bool ok() const { return error.empty(); }
};

struct GridSearchResult {
  Hyperparams best;
  std::size_t best_index = 0;
  std::vector<CvRow> cv_table;
};

// Mean validation F1 over stratified folds for every grid point; the best
// point is the first one attaining the maximum.
GridSearchResult grid_search(const Dataset& train_set, Experiment e,
                             const std::vector<Hyperparams>& grid,
                             const SplitSpec& spec);

nlohmann::json model_to_json(const TreeEnsemble& model);
TreeEnsemble model_from_json(const nlohmann::json& doc);
void save_model(const TreeEnsemble& model, const std::string& path);
TreeEnsemble load_model(const std::string& path);

}  // namespace surveyshap

#endif  // SURVEYSHAP_GBDT_H_
