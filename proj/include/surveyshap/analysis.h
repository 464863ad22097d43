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

// Aggregations over attribution matrices. Everything here is a pure function
// of its inputs.

#ifndef SURVEYSHAP_ANALYSIS_H_
#define SURVEYSHAP_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "surveyshap/dataset.h"
#include "surveyshap/treeshap.h"

namespace surveyshap {

struct ImportanceEntry {
  std::size_t feature = 0;
  std::string name;
  double mean_abs = 0.0;
};
using ImportanceRanking = std::vector<ImportanceEntry>;

// Mean |φ| per feature, descending; equal means keep schema order.
ImportanceRanking global_importance(const ShapMatrix& m);

struct CohortPoint {
  double cohort = 0.0;
  double mean_abs = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

struct CohortCurve {
  std::string feature;
  std::string cohort_feature;
  double confidence = 0.99;
  std::vector<CohortPoint> points;
};

// Two-sided standard normal quantile for a central interval, e.g. 2.5758 for
// 0.99.
double normal_critical_value(double confidence);

// Per distinct integer value of `cohort_feature`: mean |φ_feature| with a
// normal-approximation interval mean ± z·s/√n (s the sample standard
// deviation). `m` rows must align with `ds` samples.
CohortCurve cohort_curve(const ShapMatrix& m, const Dataset& ds,
                         std::size_t feature, std::size_t cohort_feature,
                         double confidence = 0.99);

struct DependenceRow {
  std::uint64_t sample_id = 0;
  double x = 0.0;
  double attribution = 0.0;
  double color = 0.0;
};

struct DependenceExtract {
  std::string x_feature;
  std::string color_feature;
  std::vector<DependenceRow> rows;
};

DependenceExtract dependence_extract(const ShapMatrix& m, const Dataset& ds,
                                     std::size_t feature,
                                     std::size_t color_feature);

enum class PairAxis { kA, kB };

// Per sample: the x-axis feature's value, Φ_ab, and the other feature's
// value as color.
DependenceExtract interaction_pair_extract(const InteractionTensor& t,
                                           const Dataset& ds,
                                           std::size_t feature_a,
                                           std::size_t feature_b,
                                           PairAxis x_axis);

struct HeatmapMatrix {
  std::vector<std::string> features;
  // Row-major M x M mean |Φ_jk|.
  std::vector<double> values;
  double at(std::size_t j, std::size_t k) const {
    return values[j * features.size() + k];
  }
};

HeatmapMatrix interaction_heatmap(const InteractionTensor& t);

struct GroupImportance {
  int group = 0;
  double mean_abs = 0.0;
  std::size_t n = 0;
};

// Mean |φ_feature| per code of a categorical `group_feature`; empty codes
// are omitted.
std::vector<GroupImportance> group_mean_importance(const ShapMatrix& m,
                                                   const Dataset& ds,
                                                   std::size_t feature,
                                                   std::size_t group_feature);

// Ranks with ties replaced by their average rank (1-based).
std::vector<double> average_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  // True when either input is constant; rho is then reported as 0.
  bool degenerate = false;
};

SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct SpearmanMatrix {
  std::vector<std::string> features;
  std::vector<double> values;  // row-major M x M
  // Names of constant columns whose correlations were set to 0.
  std::vector<std::string> constant_features;
  double at(std::size_t j, std::size_t k) const {
    return values[j * features.size() + k];
  }
};

SpearmanMatrix spearman_matrix(const Dataset& ds);

struct CurveComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  double spearman = 0.0;
  double max_gap = 0.0;
  std::size_t shared_points = 0;
};

// Pairwise Spearman correlation of mean |φ| over the shared cohort values and
// the largest absolute pointwise gap. Throws AnalysisError when a pair shares
// no cohort value.
std::vector<CurveComparison> robustness_compare(
    const std::vector<CohortCurve>& curves);
double mean_similarity(const std::vector<CurveComparison>& table);

// CSV writers for the products above.
void write_importance_csv(const ImportanceRanking& r, std::ostream& out);
void write_cohort_csv(const CohortCurve& c, std::ostream& out);
void write_dependence_csv(const DependenceExtract& d, std::ostream& out);
void write_heatmap_csv(const HeatmapMatrix& h, std::ostream& out);
void write_group_csv(const std::vector<GroupImportance>& g,
                     const std::string& group_name, std::ostream& out);
void write_spearman_csv(const SpearmanMatrix& s, std::ostream& out);
void write_comparison_csv(const std::vector<CurveComparison>& c,
                          std::ostream& out);
void write_summary_csv(const std::vector<FeatureSummary>& s, std::ostream& out);

}  // namespace surveyshap

#endif  // SURVEYSHAP_ANALYSIS_H_
