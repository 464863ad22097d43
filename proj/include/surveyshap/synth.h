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

// Synthetic survey data with planted logistic effects.
//
// Features are drawn independently from per-feature marginals. Occupation is
// then drawn in two stages:
//   working ~ Bernoulli(sigmoid(eta_work(x)))
//   white   ~ Bernoulli(sigmoid(eta_white(x)))   given working
// and blue = working and not white. Each eta is
//   b0 + sum_j b_j * z_j + categorical effects
//      + gamma * caste_scst * (age - 35) / 14
//      + delta * z_wealth * z_education
// where z_j standardizes numeric features by their configured marginal mean
// and standard deviation and leaves binary features as 0/1.

#ifndef SURVEYSHAP_SYNTH_H_
#define SURVEYSHAP_SYNTH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "surveyshap/dataset.h"

namespace surveyshap {

struct NumericMarginal {
  double mean = 0.0;
  double std_dev = 1.0;
};

struct LogitModel {
  double intercept = 0.0;
  // Coefficients of numeric or binary features, by name.
  std::map<std::string, double> linear;
  // Per-code effects of categorical features, by name.
  std::map<std::string, std::vector<double>> categorical;
  double caste_age = 0.0;
  double wealth_education = 0.0;
  // When set, the intercept is recalibrated so the expected positive rate
  // over the drawn features equals this value. For the white-collar model the
  // rate is the unconditional one, P(working and white).
  std::optional<double> target_balance;
};

struct WeightModel {
  enum class Kind { kConstant, kLogNormal };
  Kind kind = Kind::kLogNormal;
  double sigma = 0.5;
};

struct GeneratorSpec {
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::map<std::string, NumericMarginal> numeric;
  std::map<std::string, double> binary_rates;
  // general, scst, obc, unknown; normalized before use.
  std::array<double, 4> caste_probs{0.224, 0.372, 0.398, 0.004};
  // Optional code probabilities for categorical features; uniform otherwise.
  std::map<std::string, std::vector<double>> categorical_probs;
  LogitModel work;
  // Conditional on working.
  LogitModel white;
  WeightModel weights;

  // Marginals at the published survey summary statistics and a work-status
  // plant whose caste effect grows with age, with the opposite age pattern for
  // white-collar work.
  static GeneratorSpec defaults();

  // Throws GenerationError on an unknown feature, a bad probability or a
  // non-finite coefficient.
  void validate() const;
  nlohmann::json to_json() const;
  // Keys absent from `doc` keep their defaults().
  static GeneratorSpec from_json(const nlohmann::json& doc);
};

GeneratorSpec load_generator_spec(const std::string& path);

// Probabilities over the integers [lo, hi] of a discretized normal whose mean
// matches `mean` exactly and whose standard deviation approaches `std_dev` as
// far as the range allows.
std::vector<double> discretized_normal(int lo, int hi, double mean,
                                       double std_dev);

// Linear predictor of a model for one schema-ordered row.
double logit_predictor(const GeneratorSpec& spec, const LogitModel& model,
                       std::span<const double> row);

// Draws spec.n samples. Deterministic in spec. Throws GenerationError when a
// target balance cannot be reached.
Dataset generate(const GeneratorSpec& spec);

struct PlantedEffect {
  double main = 0.0;
  double interaction = 0.0;
  double total() const { return main + interaction; }
};

// Logit contribution of `feature` at `value` for a respondent of age
// `cohort_age`, read off the plant. The interaction part is non-zero only for
// caste_scst. Blue-collar has no model of its own and is rejected.
PlantedEffect ground_truth_effect(const GeneratorSpec& spec, Experiment e,
                                  std::string_view feature, double value,
                                  double cohort_age);

}  // namespace surveyshap

#endif  // SURVEYSHAP_SYNTH_H_
