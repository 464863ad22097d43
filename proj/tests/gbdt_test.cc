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

#include "surveyshap/gbdt.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "test_support.h"

namespace surveyshap {
namespace {

using testing::labelled_dataset;
using testing::numeric_schema;

// 200 distinct values, so every value gets its own histogram bin.
Dataset separable_1d() {
  const FeatureSchema schema({FeatureSpec::numeric("x", -10, 10)});
  std::vector<Sample> samples;
  for (int i = 0; i < 1000; ++i) {
    Sample s;
    s.id = static_cast<std::uint64_t>(i);
    const int k = i % 100 + 1;
    const double x = i < 500 ? -0.05 * k : 0.05 * k;
    s.features = {x};
    s.occupation = x > 0 ? Occupation::kBlue : Occupation::kUnemployed;
    samples.push_back(s);
  }
  return Dataset(schema, std::move(samples));
}

Dataset noisy_dataset(std::uint64_t seed, bool weights = true) {
  return labelled_dataset(
      400, 4, seed,
      [](const std::vector<double>& x, Rng& rng) {
        const double eta = 0.6 * (x[0] - 5) - 0.4 * (x[1] - 5) + 0.3 * (x[2] > 6 ? 1 : -1);
        return rng.uniform() < sigmoid(eta);
      },
      weights);
}

TEST(KernelTest, SplitGainAndLeafOutput) {
  EXPECT_DOUBLE_EQ(split_gain(-2, 1, 2, 1, 1), 2.0);
  EXPECT_DOUBLE_EQ(leaf_output(-3, 2, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(leaf_output(-3, 2, 1, 0.1), 0.1);
}

TEST(HyperparamsTest, DefaultsGridAndValidation) {
  const Hyperparams hp;
  EXPECT_EQ(hp.num_trees, 100);
  EXPECT_EQ(hp.learning_rate, 0.1);
  EXPECT_EQ(hp.max_leaves, 31);
  EXPECT_EQ(hp.min_samples_leaf, 20);
  EXPECT_EQ(hp.l2_lambda, 1.0);
  EXPECT_EQ(hp.max_bins, 255);
  EXPECT_EQ(default_grid().size(), 24u);
  EXPECT_EQ(Hyperparams::from_json(hp.to_json()), hp);
  Hyperparams bad;
  bad.max_bins = 257;
  EXPECT_THROW(bad.validate(), TrainingError);
  bad = Hyperparams{};
  bad.learning_rate = 0;
  EXPECT_THROW(bad.validate(), TrainingError);
}

TEST(TrainTest, ZeroTreesBalancedGivesZeroBase) {
  const Dataset ds = labelled_dataset(200, 2, 1, [](const std::vector<double>&, Rng&) {
    static int k = 0;
    return (k++ % 2) == 0;
  });
  Hyperparams hp;
  hp.num_trees = 0;
  const auto model = train(ds, Experiment::kWork, hp);
  EXPECT_TRUE(model.trees().empty());
  EXPECT_NEAR(model.base_score(), 0.0, 1e-15);
  EXPECT_EQ(predict_margin(model, ds[0].features), model.base_score());
}

TEST(TrainTest, SeparableDataIsLearnedExactly) {
  const Dataset ds = separable_1d();
  const auto model = train(ds, Experiment::kWork, Hyperparams{});
  const Metrics m = evaluate(model, ds, Experiment::kWork);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(TrainTest, SingleClassRejectedConstantFeaturesAccepted) {
  const Dataset all_negative =
      labelled_dataset(50, 2, 1, [](const std::vector<double>&, Rng&) { return false; });
  EXPECT_THROW(train(all_negative, Experiment::kWork, Hyperparams{}), TrainingError);

  const FeatureSchema schema = numeric_schema(2);
  std::vector<Sample> samples;
  for (int i = 0; i < 60; ++i) {
    Sample s;
    s.id = static_cast<std::uint64_t>(i);
    s.features = {3, 4};
    s.occupation = i % 3 == 0 ? Occupation::kBlue : Occupation::kUnemployed;
    samples.push_back(s);
  }
  const auto model = train(Dataset(schema, samples), Experiment::kWork, Hyperparams{});
  for (const auto& t : model.trees()) EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_NEAR(probability_from_margin(predict_margin(model, samples[0].features)),
              1.0 / 3.0, 1e-6);
}

TEST(TrainTest, LogLossNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainingTrace trace;
    Hyperparams hp;
    hp.num_trees = 40;
    hp.min_samples_leaf = 5;
    train(noisy_dataset(seed), Experiment::kWork, hp, 0, &trace);
    ASSERT_EQ(trace.log_loss.size(), 41u);
    for (std::size_t r = 1; r < trace.log_loss.size(); ++r) {
      EXPECT_LE(trace.log_loss[r], trace.log_loss[r - 1]) << "seed " << seed << " round " << r;
    }
  }
}

TEST(TrainTest, CoversConserveExactly) {
  const auto model = train(noisy_dataset(3), Experiment::kWork, Hyperparams{});
  for (const auto& t : model.trees()) {
    for (const auto& n : t.nodes) {
      EXPECT_GT(n.cover, 0.0);
      if (!n.is_leaf()) {
        EXPECT_EQ(n.cover, t.nodes[static_cast<std::size_t>(n.left)].cover +
                               t.nodes[static_cast<std::size_t>(n.right)].cover);
      }
    }
  }
}

TEST(TrainTest, DuplicatesEqualWeights) {
  const Dataset base = noisy_dataset(5, false);
  std::vector<Sample> dup, weighted;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const int k = 1 + static_cast<int>(i % 4);
    Sample s = base[i];
    for (int c = 0; c < k; ++c) dup.push_back(s);
    s.weight = k;
    weighted.push_back(s);
  }
  Hyperparams hp;
  hp.num_trees = 30;
  const auto a = train(Dataset(base.schema(), dup), Experiment::kWork, hp);
  const auto b = train(Dataset(base.schema(), weighted), Experiment::kWork, hp);
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
}

TEST(TrainTest, ThreadCountDoesNotChangeModel) {
  const Dataset ds = noisy_dataset(7);
  set_thread_count(1);
  const auto a = model_to_json(train(ds, Experiment::kWork, Hyperparams{})).dump();
  set_thread_count(4);
  const auto b = model_to_json(train(ds, Experiment::kWork, Hyperparams{})).dump();
  set_thread_count(1);
  EXPECT_EQ(a, b);
}

TEST(PredictTest, EmptyEnsembleAndSingleLeaf) {
  const FeatureSchema schema = numeric_schema(2);
  const TreeEnsemble empty(schema, 0.7, {});
  const std::vector<double> x = {1, 2};
  EXPECT_EQ(predict_margin(empty, x), 0.7);
  const TreeEnsemble leaf(schema, 0.7, {testing::single_leaf(-0.2, 10)});
  EXPECT_EQ(predict_margin(leaf, x), 0.7 + -0.2);
  EXPECT_THROW(predict_margin(leaf, std::vector<double>{1}), PredictionError);
}

TEST(PredictTest, CategoricalCodeOutOfRange) {
  const auto schema = testing::mixed_schema(3);
  Rng rng(1);
  const auto model = testing::random_ensemble(schema, rng, 3, 3);
  EXPECT_THROW(predict_margin(model, std::vector<double>{1, 1, 4}), PredictionError);
  EXPECT_NO_THROW(predict_margin(model, std::vector<double>{1, 1, 3}));
}

TEST(PredictTest, ProbabilityLink) {
  EXPECT_EQ(probability_from_margin(0.0), 0.5);
  EXPECT_NEAR(probability_from_margin(std::log(3.0)), 0.75, 1e-15);
  EXPECT_EQ(probability_from_margin(1e6), 1 - 1e-15);
  EXPECT_EQ(probability_from_margin(-1e6), 1e-15);
  EXPECT_LT(probability_from_margin(1.0), probability_from_margin(1.5));
}

TEST(MetricsTest, ConfusionArithmetic) {
  const Metrics m = metrics_from_confusion(2, 1, 1, 6);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
  // Oracle: precision = recall = 2/3.
  const double p = 2.0 / 3.0;
  EXPECT_DOUBLE_EQ(m.f1, 2 * p * p / (p + p));
  EXPECT_DOUBLE_EQ(m.class_balance, 0.3);
  const Metrics perfect = metrics_from_confusion(4, 0, 0, 6);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const Metrics none = metrics_from_confusion(0, 0, 4, 6);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(SerializationTest, RoundTripIsBitExact) {
  const Dataset ds = noisy_dataset(11);
  const auto model = train(ds, Experiment::kWork, Hyperparams{});
  const auto path = (std::filesystem::temp_directory_path() / "surveyshap_model_rt.json").string();
  save_model(model, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(model_to_json(back).dump(), model_to_json(model).dump());
  EXPECT_EQ(back.base_score(), model.base_score());
  for (const auto& s : ds.samples()) {
    EXPECT_EQ(predict_margin(back, s.features), predict_margin(model, s.features));
  }
  EXPECT_THROW(model_from_json(nlohmann::json{{"format", "other"}}), TrainingError);
}

TEST(GridSearchTest, SinglePointAndTieRule) {
  const Dataset ds = noisy_dataset(2);
  Hyperparams hp;
  hp.num_trees = 10;
  SplitSpec spec;
  spec.seed = 1;
  auto r = grid_search(ds, Experiment::kWork, {hp}, spec);
  EXPECT_EQ(r.best, hp);
  EXPECT_EQ(r.cv_table.size(), 1u);
  EXPECT_EQ(r.cv_table[0].fold_f1.size(), 5u);
  r = grid_search(ds, Experiment::kWork, {hp, hp}, spec);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_THROW(grid_search(ds, Experiment::kWork, {}, spec), TrainingError);
}

TEST(GridSearchTest, LargerModelWinsOnSeparableData) {
  const Dataset ds = labelled_dataset(600, 2, 4, [](const std::vector<double>& x, Rng&) {
    return (x[0] > 5) != (x[1] > 5);
  });
  Hyperparams small;
  small.num_trees = 1;
  small.max_leaves = 2;
  small.min_samples_leaf = 5;
  Hyperparams large;
  large.min_samples_leaf = 5;
  SplitSpec spec;
  spec.seed = 8;
  const auto r = grid_search(ds, Experiment::kWork, {small, large}, spec);
  EXPECT_GE(r.cv_table[1].mean_f1, r.cv_table[0].mean_f1);
  EXPECT_EQ(r.best_index, 1u);
}

TEST(GridSearchTest, FailingPointIsRecorded) {
  const Dataset ds = noisy_dataset(2);
  Hyperparams good;
  good.num_trees = 5;
  Hyperparams bad = good;
  bad.l2_lambda = -1;
  SplitSpec spec;
  const auto r = grid_search(ds, Experiment::kWork, {bad, good}, spec);
  EXPECT_FALSE(r.cv_table[0].ok());
  EXPECT_TRUE(r.cv_table[1].ok());
  EXPECT_EQ(r.best_index, 1u);
  EXPECT_THROW(grid_search(ds, Experiment::kWork, {bad}, spec), TrainingError);
}

}  // namespace
}  // namespace surveyshap
