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

#include "surveyshap/dataset.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "test_support.h"

namespace surveyshap {
namespace {

using testing::survey_sample;

std::string survey_header() {
  std::string h = "sample_id";
  for (const auto& name : FeatureSchema::survey().names()) h += "," + name;
  return h + ",occupation,weight\n";
}

Dataset survey_dataset(std::size_t positives, std::size_t negatives,
                       bool random_weights = false, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < positives + negatives; ++i) {
    samples.push_back(survey_sample(
        i, i < positives ? Occupation::kBlue : Occupation::kUnemployed,
        static_cast<int>(i % 4), 21 + static_cast<double>(i % 29),
        random_weights ? 0.2 + 3.0 * rng.uniform() : 1.0));
  }
  return Dataset(FeatureSchema::survey(), std::move(samples));
}

TEST(SchemaTest, SurveySchemaMatchesPublishedFeatures) {
  const auto s = FeatureSchema::survey();
  ASSERT_EQ(s.size(), 16u);
  EXPECT_EQ(s[0].name, "age");
  EXPECT_EQ(s[0].min, 21);
  EXPECT_EQ(s[0].max, 49);
  EXPECT_EQ(s[2].kind, FeatureKind::kCategorical);
  EXPECT_EQ(s[2].categories, 36);
  EXPECT_EQ(s[4].categories, 10);
  EXPECT_EQ(s[3].kind, FeatureKind::kBinary);
  EXPECT_EQ(s.index_of("household_members"), 6u);
  EXPECT_EQ(s[6].min, 1);
  EXPECT_EQ(s[6].max, 39);
  for (std::size_t j = 12; j < 16; ++j) EXPECT_EQ(s[j].one_hot_group, "caste");
  const auto names = s.names();
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
}

TEST(SchemaTest, JsonRoundTripAndRejections) {
  const auto s = FeatureSchema::survey();
  EXPECT_EQ(FeatureSchema::from_json(s.to_json()), s);
  EXPECT_THROW(FeatureSchema({FeatureSpec::numeric("a", 0, 1),
                              FeatureSpec::numeric("a", 0, 1)}),
               SchemaError);
  EXPECT_THROW(s.index_of("nope"), SchemaError);
}

TEST(CsvTest, LabelsDeriveFromOccupation) {
  Dataset ds(FeatureSchema::survey(),
             {survey_sample(0, Occupation::kBlue), survey_sample(1, Occupation::kUnemployed),
              survey_sample(2, Occupation::kWhite)});
  std::stringstream buf;
  write_csv(ds, buf);
  const Dataset back = read_csv(buf, FeatureSchema::survey());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_TRUE(back[0].work_status());
  EXPECT_TRUE(back[0].blue_collar());
  EXPECT_FALSE(back[0].white_collar());
  EXPECT_FALSE(back[1].work_status() || back[1].blue_collar() || back[1].white_collar());
  EXPECT_TRUE(back[2].work_status() && back[2].white_collar() && !back[2].blue_collar());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].features, ds[i].features);
    EXPECT_EQ(back[i].id, ds[i].id);
  }
}

TEST(CsvTest, TwoCasteFlagsRejectedWithRowIndex) {
  std::stringstream in;
  in << survey_header();
  in << "0,30,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n";
  in << "1,30,8,3,0,1,2,5,2,2,1,0,0,0,1,1,0,blue,1\n";
  try {
    read_csv(in, FeatureSchema::survey());
    FAIL() << "expected RowError";
  } catch (const RowError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(CsvTest, MissingColumnNamed) {
  std::stringstream in;
  in << "age,occupation,weight\n30,blue,1\n";
  try {
    read_csv(in, FeatureSchema::survey());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("years_of_education"), std::string::npos);
  }
}

TEST(CsvTest, RowLevelErrors) {
  const std::string good = "0,30,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n";
  const std::vector<std::string> bad = {
      "1,50,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n",    // age out of range
      "1,30,8,36,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n",   // state code 36
      "1,30,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,0\n",    // zero weight
      "1,30,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,-2\n",   // negative weight
      "1,30,,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n",     // missing value
      "1,30,abc,3,0,1,2,5,2,2,1,0,0,0,1,0,0,blue,1\n",  // non-numeric
      "1,30,8,3,0,1,2,5,2,2,1,0,0,0,1,0,0,farmer,1\n",  // unknown occupation
  };
  for (const auto& row : bad) {
    std::stringstream in;
    in << survey_header() << good << row;
    try {
      read_csv(in, FeatureSchema::survey());
      ADD_FAILURE() << "accepted: " << row;
    } catch (const RowError& e) {
      EXPECT_EQ(e.row(), 1u) << row;
    }
  }
}

TEST(DatasetTest, ConstructorRejectsInvalidSamples) {
  auto s = survey_sample(0, Occupation::kBlue);
  s.weight = 0;
  EXPECT_THROW(Dataset(FeatureSchema::survey(), {s}), RowError);
  EXPECT_THROW(Dataset(FeatureSchema::survey(), {}), Error);
}

// Counts of working, blue- and white-collar women out of the full survey
// extract.
TEST(ClassBalanceTest, PublishedCounts) {
  std::vector<Sample> samples;
  const std::size_t total = 81816, blue = 23141, white = 4733;
  for (std::size_t i = 0; i < total; ++i) {
    samples.push_back(survey_sample(i, i < blue                ? Occupation::kBlue
                                       : i < blue + white      ? Occupation::kWhite
                                                               : Occupation::kUnemployed));
  }
  const Dataset ds(FeatureSchema::survey(), std::move(samples));
  auto round3 = [](double v) { return std::round(v * 1000) / 1000; };
  EXPECT_DOUBLE_EQ(class_balance(ds, Experiment::kWork), 27874.0 / 81816.0);
  EXPECT_DOUBLE_EQ(round3(class_balance(ds, Experiment::kWork)), 0.341);
  EXPECT_DOUBLE_EQ(round3(class_balance(ds, Experiment::kBlue)), 0.283);
  EXPECT_DOUBLE_EQ(round3(class_balance(ds, Experiment::kWhite)), 0.058);
}

TEST(SummaryTest, TwoAgesAndConstantRows) {
  auto a = survey_sample(0, Occupation::kBlue, 1, 21);
  auto b = survey_sample(1, Occupation::kBlue, 1, 49);
  const auto stats = summary_stats(Dataset(FeatureSchema::survey(), {a, b}));
  EXPECT_DOUBLE_EQ(*stats[0].mean, 35.0);
  // Oracle: sqrt(((21-35)^2 + (49-35)^2) / (2-1)).
  EXPECT_NEAR(*stats[0].std_dev, std::sqrt(392.0), 1e-12);
  EXPECT_NEAR(*stats[0].std_dev, 19.7990, 5e-5);
  EXPECT_FALSE(stats[2].mean.has_value());
  EXPECT_EQ(stats[2].code_counts.size(), 36u);
  EXPECT_EQ(stats[2].code_counts[3], 2u);

  const auto same = summary_stats(Dataset(FeatureSchema::survey(), {a, a, a}));
  for (const auto& f : same) {
    if (f.std_dev) EXPECT_EQ(*f.std_dev, 0.0) << f.name;
  }
}

TEST(SplitTest, FloorPerClass) {
  const Dataset ds = survey_dataset(341, 659, true);
  SplitSpec spec;
  spec.seed = 9;
  const auto split = stratified_split(ds, Experiment::kBlue, spec);
  EXPECT_EQ(split.test.count_positive(Experiment::kBlue), 17u);
  EXPECT_EQ(split.test.size() - split.test.count_positive(Experiment::kBlue), 32u);
  EXPECT_EQ(split.train.size() + split.test.size(), ds.size());
  std::set<std::uint64_t> ids;
  for (const auto& s : split.train.samples()) ids.insert(s.id);
  for (const auto& s : split.test.samples()) EXPECT_TRUE(ids.insert(s.id).second);
  EXPECT_EQ(ids.size(), ds.size());
}

TEST(SplitTest, DeterministicAndSeedSensitive) {
  const Dataset ds = survey_dataset(300, 700, true);
  SplitSpec spec;
  spec.seed = 4;
  const auto a = stratified_split(ds, Experiment::kWork, spec);
  const auto b = stratified_split(ds, Experiment::kWork, spec);
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].id, b.test[i].id);
  spec.seed = 5;
  const auto c = stratified_split(ds, Experiment::kWork, spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.test.size(); ++i) differs |= a.test[i].id != c.test[i].id;
  EXPECT_TRUE(differs);
}

TEST(SplitTest, BalancePreservedForEqualAndUnequalWeights) {
  for (const bool weighted : {true, false}) {
    const Dataset ds = survey_dataset(3410, 6590, true);
    SplitSpec spec;
    spec.weighted = weighted;
    spec.seed = 11;
    const auto split = stratified_split(ds, Experiment::kWork, spec);
    EXPECT_LT(std::abs(class_balance(split.train, Experiment::kWork) -
                       class_balance(ds, Experiment::kWork)),
              0.005);
  }
}

TEST(SplitTest, TooSmallClassAndBadSpec) {
  const Dataset ds = survey_dataset(10, 200);
  EXPECT_THROW(stratified_split(ds, Experiment::kWork, SplitSpec{}), SamplingError);
  SplitSpec bad;
  bad.test_fraction = 1.0;
  EXPECT_THROW(bad.validate(), SamplingError);
  bad = SplitSpec{};
  bad.folds = 1;
  EXPECT_THROW(bad.validate(), SamplingError);
  const Dataset one_class = survey_dataset(0, 200);
  EXPECT_THROW(stratified_split(one_class, Experiment::kWork, SplitSpec{}), SamplingError);
}

TEST(KFoldTest, ExactStratification) {
  const Dataset ds = survey_dataset(40, 60);
  SplitSpec spec;
  spec.seed = 3;
  const auto folds = kfold(ds, Experiment::kWork, spec);
  ASSERT_EQ(folds.size(), 5u);
  std::multiset<std::uint64_t> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.valid.count_positive(Experiment::kWork), 8u);
    EXPECT_EQ(f.valid.size(), 20u);
    EXPECT_EQ(f.train.size(), 80u);
    for (const auto& s : f.valid.samples()) seen.insert(s.id);
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(std::set<std::uint64_t>(seen.begin(), seen.end()).size(), 100u);
  EXPECT_EQ(stratified_fold_assignment(ds, Experiment::kWork, spec),
            stratified_fold_assignment(ds, Experiment::kWork, spec));
}

TEST(KFoldTest, TwoFoldsOnFourSamples) {
  const Dataset ds = survey_dataset(2, 2);
  SplitSpec spec;
  spec.folds = 2;
  for (const auto& f : kfold(ds, Experiment::kWork, spec)) {
    EXPECT_EQ(f.valid.size(), 2u);
    EXPECT_EQ(f.valid.count_positive(Experiment::kWork), 1u);
  }
  EXPECT_THROW(kfold(survey_dataset(3, 50), Experiment::kWork, SplitSpec{}), SamplingError);
}

TEST(SubsampleTest, FullDrawAndOversize) {
  const Dataset ds = survey_dataset(20, 30, true);
  const Dataset all = weighted_subsample(ds, ds.size(), 1);
  std::set<std::uint64_t> ids;
  for (const auto& s : all.samples()) ids.insert(s.id);
  EXPECT_EQ(ids.size(), ds.size());
  EXPECT_THROW(weighted_subsample(ds, ds.size() + 1, 1), SamplingError);
}

TEST(SubsampleTest, EqualWeightsAreUniform) {
  const std::size_t n = 10, trials = 10000;
  const std::vector<double> w(n, 1.0);
  std::vector<int> hits(n, 0);
  for (std::size_t t = 0; t < trials; ++t) ++hits[weighted_sample_indices(w, 1, t)[0]];
  const double p = 1.0 / n;
  const double se = std::sqrt(trials * p * (1 - p));
  for (const int h : hits) EXPECT_LT(std::abs(h - trials * p), 3 * se + 1);
}

TEST(SubsampleTest, HeavyWeightDominates) {
  std::vector<double> w(50, 1.0);
  w[17] = 1e6;
  int hits = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) hits += weighted_sample_indices(w, 1, t)[0] == 17;
  EXPECT_GT(hits, 990);
}

TEST(BootstrapTest, SizesPermutationAndOverlap) {
  const Dataset ds = survey_dataset(40, 60);
  const auto full = bootstrap_subsets(ds, 2, 1.0, 5);
  for (const auto& s : full) {
    std::set<std::uint64_t> ids;
    for (const auto& x : s.samples()) ids.insert(x.id);
    EXPECT_EQ(ids.size(), ds.size());
  }
  const auto halves = bootstrap_subsets(ds, 10, 0.5, 5);
  double overlap = 0;
  int pairs = 0;
  for (std::size_t a = 0; a < halves.size(); ++a) {
    EXPECT_EQ(halves[a].size(), 50u);
    std::set<std::uint64_t> ia;
    for (const auto& x : halves[a].samples()) ia.insert(x.id);
    for (std::size_t b = a + 1; b < halves.size(); ++b) {
      int shared = 0;
      for (const auto& x : halves[b].samples()) shared += ia.count(x.id);
      overlap += shared / 50.0;
      ++pairs;
    }
  }
  EXPECT_NEAR(overlap / pairs, 0.5, 0.1);
  EXPECT_THROW(bootstrap_subsets(ds, 0, 0.5, 1), SamplingError);
  EXPECT_THROW(bootstrap_subsets(ds, 1, 0.0, 1), SamplingError);
}

}  // namespace
}  // namespace surveyshap
