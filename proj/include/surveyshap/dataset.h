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

// Survey feature schema, weighted sample storage, CSV ingestion and the
// sampling primitives (stratified split, stratified folds, weighted
// subsampling without replacement).

#ifndef SURVEYSHAP_DATASET_H_
#define SURVEYSHAP_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "surveyshap/common.h"

namespace surveyshap {

enum class FeatureKind { kNumeric, kBinary, kCategorical };

std::string_view feature_kind_name(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Inclusive bounds. Binary features are always [0, 1]; categorical features
  // are [0, categories - 1].
  double min = 0.0;
  double max = 0.0;
  // Number of dense integer codes; categorical only.
  int categories = 0;
  // Features sharing a non-empty group form a one-hot block: exactly one of
  // them is 1 in every sample.
  std::string one_hot_group;

  static FeatureSpec numeric(std::string name, double min, double max);
  static FeatureSpec binary(std::string name, std::string group = {});
  static FeatureSpec categorical(std::string name, int categories);

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  // The sixteen survey features with their published kinds and ranges.
  static FeatureSchema survey();

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  std::vector<std::string> names() const;

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws SchemaError naming the feature when absent.
  std::size_t index_of(std::string_view name) const;

  // Returns a description of the first violation, or nullopt when the row
  // conforms (ranges, integrality of codes, one-hot blocks).
  std::optional<std::string> check_row(std::span<const double> row) const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& doc);

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureSpec> features_;
};

FeatureSchema load_schema_json(const std::string& path);

enum class Occupation { kUnemployed, kBlue, kWhite };

std::string_view occupation_name(Occupation o);
std::optional<Occupation> parse_occupation(std::string_view name);

// One respondent. The three experiment labels are derived from the single
// occupation value, so they can never disagree.
struct Sample {
  std::uint64_t id = 0;
  std::vector<double> features;
  double weight = 1.0;
  Occupation occupation = Occupation::kUnemployed;

  bool work_status() const { return occupation != Occupation::kUnemployed; }
  bool blue_collar() const { return occupation == Occupation::kBlue; }
  bool white_collar() const { return occupation == Occupation::kWhite; }
  bool label(Experiment e) const;
};

enum class Provenance { kIngested, kSynthetic };

// Immutable, validated collection of samples sharing one schema.
class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<Sample> samples,
          Provenance provenance = Provenance::kIngested);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  Provenance provenance() const { return provenance_; }

  // Samples at `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::size_t count_positive(Experiment e) const;
  std::vector<double> column(std::size_t feature) const;
  std::vector<double> weights() const;

 private:
  FeatureSchema schema_;
  std::vector<Sample> samples_;
  Provenance provenance_;
};

// CSV ingestion. The header must name every schema feature, `label_column`
// (occupation values unemployed|blue|white) and `weight_column`; an optional
// `sample_id` column carries stable identifiers, otherwise the data row index
// is used.
Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 std::string_view label_column = "occupation",
                 std::string_view weight_column = "weight");
Dataset read_csv(std::istream& in, const FeatureSchema& schema,
                 std::string_view label_column = "occupation",
                 std::string_view weight_column = "weight");

// Writes sample_id, the schema features, occupation and weight.
void write_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::string& path);

// Unweighted positive fraction.
double class_balance(const Dataset& ds, Experiment e);

struct FeatureSummary {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Unset for categorical features, which report code frequencies instead.
  std::optional<double> mean;
  std::optional<double> std_dev;
  std::vector<std::size_t> code_counts;
};

// Unweighted mean and sample (n - 1) standard deviation per feature.
std::vector<FeatureSummary> summary_stats(const Dataset& ds);

struct SplitSpec {
  double test_fraction = 0.05;
  int folds = 5;
  std::uint64_t seed = 0;
  // Draw test members proportionally to survey weight; false draws uniformly
  // within each class.
  bool weighted = true;

  void validate() const;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Per class c, floor(test_fraction * n_c) members go to the test set, drawn
// without replacement (weight-proportional unless spec.weighted is false).
// Both outputs keep the input order.
TrainTestSplit stratified_split(const Dataset& ds, Experiment e,
                                const SplitSpec& spec);

// Fold index in [0, folds) for every sample. Each class is shuffled and dealt
// round-robin, so per-fold class counts differ by at most one.
std::vector<int> stratified_fold_assignment(const Dataset& ds, Experiment e,
                                            const SplitSpec& spec);

struct Fold {
  Dataset train;
  Dataset valid;
};

std::vector<Fold> kfold(const Dataset& ds, Experiment e, const SplitSpec& spec);

// Exponential-key weighted sampling without replacement: key_i = log(u_i) /
// w_i, the k largest keys win. Returned in descending key order.
std::vector<std::size_t> weighted_sample_indices(std::span<const double> weights,
                                                 std::size_t k,
                                                 std::uint64_t seed);

Dataset weighted_subsample(const Dataset& ds, std::size_t k, std::uint64_t seed);

// `count` independent weighted draws of floor(fraction * n) samples; subset i
// uses derive_seed(seed, i).
std::vector<Dataset> bootstrap_subsets(const Dataset& ds, int count,
                                       double fraction, std::uint64_t seed);

}  // namespace surveyshap

#endif  // SURVEYSHAP_DATASET_H_
