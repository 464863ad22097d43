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

// Exact Shapley attributions for tree ensembles under the path-dependent
// (cover-weighted) expectation. All values are in log-odds margin units.
//
// The value of a coalition S for input x is
//   v(S) = base_score + sum_t E_t(x, S)
// where E_t follows x's branch at splits on features in S and averages both
// children by training cover otherwise. The polynomial-time routines below
// compute Shapley values and pairwise Shapley interaction indices of v; the
// brute-force routines enumerate coalitions and exist to verify them.

#ifndef SURVEYSHAP_TREESHAP_H_
#define SURVEYSHAP_TREESHAP_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "surveyshap/dataset.h"
#include "surveyshap/gbdt.h"

namespace surveyshap {

struct ShapMatrix {
  std::size_t num_samples = 0;
  std::size_t num_features = 0;
  // Row-major: values[i * num_features + j].
  std::vector<double> values;
  double base_value = 0.0;
  std::vector<std::uint64_t> sample_ids;
  std::vector<std::string> feature_names;

  double at(std::size_t i, std::size_t j) const {
    return values[i * num_features + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * num_features, num_features};
  }
};

struct InteractionTensor {
  std::size_t num_samples = 0;
  std::size_t num_features = 0;
  // values[(i * num_features + j) * num_features + k]; diagonal entries are
  // main effects.
  std::vector<double> values;
  double base_value = 0.0;
  std::vector<std::uint64_t> sample_ids;
  std::vector<std::string> feature_names;

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * num_features + j) * num_features + k];
  }
  std::span<const double> matrix(std::size_t i) const {
    return {values.data() + i * num_features * num_features,
            num_features * num_features};
  }
};

// v(S) with S given as a membership mask over schema features.
double conditional_expectation(const TreeEnsemble& model,
                               std::span<const double> x,
                               const std::vector<bool>& in_set);

// v(∅): the cover-weighted expected model output.
double expected_value(const TreeEnsemble& model);

inline constexpr std::size_t kBruteForceShapMaxFeatures = 15;
inline constexpr std::size_t kBruteForceInteractionMaxFeatures = 12;

// Classical Shapley formula over all 2^M coalitions. Throws AttributionError
// above kBruteForceShapMaxFeatures.
std::vector<double> shap_brute_force(const TreeEnsemble& model,
                                     std::span<const double> x);

// Shapley interaction index over all coalitions, M x M row-major, diagonal
// = φ_j − Σ_{k≠j} Φ_jk. Throws above kBruteForceInteractionMaxFeatures.
std::vector<double> interaction_brute_force(const TreeEnsemble& model,
                                            std::span<const double> x);

// Polynomial-time attribution for one input.
std::vector<double> shap_for_input(const TreeEnsemble& model,
                                   std::span<const double> x);

// One row of the interaction matrix: Φ_jk for every k, obtained by running the
// path algorithm with feature j fixed present and fixed absent. Only trees
// that split on j are visited. The diagonal entry is φ_j − Σ_{k≠j} Φ_jk.
std::vector<double> interaction_row(const TreeEnsemble& model,
                                    std::span<const double> x,
                                    std::size_t feature);

// Full M x M interaction matrix for one input, symmetrized so that
// Φ_jk == Φ_kj exactly.
std::vector<double> interactions_for_input(const TreeEnsemble& model,
                                           std::span<const double> x);

// Throw AttributionError when the dataset schema differs from the model's.
ShapMatrix shap_values(const TreeEnsemble& model, const Dataset& ds);
InteractionTensor interaction_values(const TreeEnsemble& model,
                                     const Dataset& ds);

// Diagonal of every per-sample matrix, row-major n x M.
ShapMatrix main_effects(const InteractionTensor& t);

// max_i |base + Σ_j φ_ij − margin(x_i)| / max(1, |margin(x_i)|)
double max_local_accuracy_error(const TreeEnsemble& model, const Dataset& ds,
                                const ShapMatrix& m);

// Long-format CSV: sample_id,feature,value.
void write_shap_csv(const ShapMatrix& m, std::ostream& out);
// Long-format CSV: sample_id,feature,feature_2,value.
void write_interactions_csv(const InteractionTensor& t, std::ostream& out);

// Columnar float64 little-endian dump at `<prefix>.bin` (one contiguous column
// per feature, or per feature pair for tensors) with shape metadata, feature
// names, sample ids and the base value in `<prefix>.json`.
void save_shap_binary(const ShapMatrix& m, const std::string& prefix);
ShapMatrix load_shap_binary(const std::string& prefix);
void save_interactions_binary(const InteractionTensor& t,
                              const std::string& prefix);
InteractionTensor load_interactions_binary(const std::string& prefix);

}  // namespace surveyshap

#endif  // SURVEYSHAP_TREESHAP_H_
