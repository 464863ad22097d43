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

// Builders shared by the unit tests and the acceptance runner.

#ifndef SURVEYSHAP_TESTS_TEST_SUPPORT_H_
#define SURVEYSHAP_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surveyshap/common.h"
#include "surveyshap/dataset.h"
#include "surveyshap/gbdt.h"

namespace surveyshap::testing {

// `m` features; the last one is categorical with 4 codes when m >= 2, the rest
// numeric on [0, 10].
inline FeatureSchema mixed_schema(std::size_t m) {
  std::vector<FeatureSpec> f;
  for (std::size_t j = 0; j < m; ++j) {
    if (m >= 2 && j + 1 == m) {
      f.push_back(FeatureSpec::categorical("c" + std::to_string(j), 4));
    } else {
      f.push_back(FeatureSpec::numeric("x" + std::to_string(j), 0, 10));
    }
  }
  return FeatureSchema(std::move(f));
}

inline FeatureSchema numeric_schema(std::size_t m, double lo = 0, double hi = 10) {
  std::vector<FeatureSpec> f;
  for (std::size_t j = 0; j < m; ++j) {
    f.push_back(FeatureSpec::numeric("x" + std::to_string(j), lo, hi));
  }
  return FeatureSchema(std::move(f));
}

inline std::vector<double> random_row(const FeatureSchema& schema, Rng& rng) {
  std::vector<double> x(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& f = schema[j];
    if (f.kind == FeatureKind::kNumeric) {
      x[j] = f.min + (f.max - f.min) * rng.uniform();
    } else {
      x[j] = static_cast<double>(rng.below(static_cast<std::uint64_t>(f.max) + 1));
    }
  }
  return x;
}

namespace detail {

inline int grow(Tree& t, const FeatureSchema& schema, Rng& rng, double cover,
                int depth, int max_depth) {
  const int index = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  TreeNode node;
  node.cover = cover;
  const bool leaf = depth >= max_depth || (depth > 0 && rng.uniform() < 0.25);
  if (leaf) {
    node.value = 2.0 * rng.uniform() - 1.0;
    t.nodes[static_cast<std::size_t>(index)] = node;
    return index;
  }
  const std::size_t j = rng.below(schema.size());
  node.feature = static_cast<int>(j);
  const auto& f = schema[j];
  if (f.kind == FeatureKind::kCategorical) {
    const int k = f.categories;
    // A random non-empty proper subset.
    const auto mask = 1 + rng.below((1u << k) - 2);
    for (int c = 0; c < k; ++c) {
      if (mask & (1u << c)) node.left_categories.push_back(c);
    }
  } else {
    node.threshold = f.min + (f.max - f.min) * (0.1 + 0.8 * rng.uniform());
  }
  const double left_cover = cover * (0.1 + 0.8 * rng.uniform());
  node.left = grow(t, schema, rng, left_cover, depth + 1, max_depth);
  node.right = grow(t, schema, rng, cover - left_cover, depth + 1, max_depth);
  t.nodes[static_cast<std::size_t>(index)] = node;
  return index;
}

}  // namespace detail

// Random ensemble with positive covers that conserve mass at every split.
inline TreeEnsemble random_ensemble(const FeatureSchema& schema, Rng& rng,
                                    int num_trees, int max_depth) {
  std::vector<Tree> trees(static_cast<std::size_t>(num_trees));
  for (auto& t : trees) {
    detail::grow(t, schema, rng, 50.0 + 100.0 * rng.uniform(), 0, max_depth);
  }
  return TreeEnsemble(schema, rng.uniform() - 0.5, std::move(trees));
}

// One numeric stump on `feature`.
inline Tree stump(int feature, double threshold, double left_value,
                  double right_value, double left_cover, double right_cover) {
  Tree t;
  TreeNode root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  root.cover = left_cover + right_cover;
  TreeNode l, r;
  l.value = left_value;
  l.cover = left_cover;
  r.value = right_value;
  r.cover = right_cover;
  t.nodes = {root, l, r};
  return t;
}

inline Tree single_leaf(double value, double cover) {
  Tree t;
  TreeNode leaf;
  leaf.value = value;
  leaf.cover = cover;
  t.nodes = {leaf};
  return t;
}

// Survey-schema sample with a valid caste block; caste index 0..3.
inline Sample survey_sample(std::uint64_t id, Occupation occupation,
                            int caste = 1, double age = 30, double weight = 1.0) {
  Sample s;
  s.id = id;
  s.features = {age, 8, 3, 0, 1, 2, 5, 2, 2, 1, 0, 0, 0, 0, 0, 0};
  s.features[12 + static_cast<std::size_t>(caste)] = 1.0;
  s.occupation = occupation;
  s.weight = weight;
  return s;
}

// Two-feature binary-label dataset on numeric_schema(m); label from `rule`.
template <typename Rule>
Dataset labelled_dataset(std::size_t n, std::size_t m, std::uint64_t seed,
                         Rule&& rule, bool random_weights = false) {
  const FeatureSchema schema = numeric_schema(m);
  Rng rng(seed);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = i;
    s.features = random_row(schema, rng);
    for (double& v : s.features) v = std::round(v * 4) / 4;
    s.occupation = rule(s.features, rng) ? Occupation::kBlue : Occupation::kUnemployed;
    s.weight = random_weights ? 0.5 + rng.uniform() : 1.0;
    samples.push_back(std::move(s));
  }
  return Dataset(schema, std::move(samples));
}

}  // namespace surveyshap::testing

#endif  // SURVEYSHAP_TESTS_TEST_SUPPORT_H_
