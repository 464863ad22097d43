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

#include "surveyshap/treeshap.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "json.hpp"

namespace surveyshap {

namespace {

double tree_expectation(const Tree& tree, std::size_t i,
                        std::span<const double> x,
                        const std::vector<bool>& in_set) {
  const auto& n = tree.nodes[i];
  if (n.is_leaf()) return n.value;
  const auto left = static_cast<std::size_t>(n.left);
  const auto right = static_cast<std::size_t>(n.right);
  const auto f = static_cast<std::size_t>(n.feature);
  if (in_set[f]) {
    return tree_expectation(tree, n.goes_left(x[f]) ? left : right, x, in_set);
  }
  const double cl = tree.nodes[left].cover;
  const double cr = tree.nodes[right].cover;
  return (cl * tree_expectation(tree, left, x, in_set) +
          cr * tree_expectation(tree, right, x, in_set)) /
         n.cover;
}

// Coalition values for every subset mask of M features.
std::vector<double> all_coalition_values(const TreeEnsemble& model,
                                         std::span<const double> x) {
  const std::size_t m = model.schema().size();
  const std::size_t subsets = std::size_t{1} << m;
  std::vector<double> v(subsets);
  std::vector<bool> in_set(m);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t j = 0; j < m; ++j) in_set[j] = (s >> j) & 1;
    v[s] = conditional_expectation(model, x, in_set);
  }
  return v;
}

std::vector<double> factorials(std::size_t n) {
  std::vector<double> f(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) f[i] = f[i - 1] * static_cast<double>(i);
  return f;
}

struct PathElement {
  int feature = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

void extend_path(PathElement* path, int depth, double zero_fraction,
                 double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / (depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      next_one_portion =
          tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1);
    } else {
      path[i].pweight =
          path[i].pweight * (depth + 1) / (zero_fraction * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total weight the path would carry if element `index` were unwound.
double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0;
  if (one_fraction != 0) {
    for (int i = depth - 1; i >= 0; --i) {
      const double tmp = next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion =
          path[i].pweight - tmp * zero_fraction * (depth - i) / (depth + 1);
    }
  } else {
    for (int i = depth - 1; i >= 0; --i) {
      total += path[i].pweight * (depth + 1) / (zero_fraction * (depth - i));
    }
  }
  return total;
}

// How a single feature is treated during one pass: not at all (regular
// attribution), always present, or always absent.
enum class Condition { kNone, kPresent, kAbsent };

class PathShap {
 public:
  PathShap(const Tree& tree, std::span<const double> x, std::span<double> phi,
           Condition condition, int condition_feature)
      : tree_(tree),
        x_(x),
        phi_(phi),
        condition_(condition),
        condition_feature_(condition_feature) {
    const auto depth = static_cast<std::size_t>(tree.max_depth()) + 2;
    storage_.resize(depth * (depth + 1) / 2 + depth);
  }

  void run() { recurse(0, 0, storage_.data(), 1.0, 1.0, -1, 1.0); }

 private:
  void recurse(std::size_t node_index, int depth, PathElement* parent_path,
               double parent_zero_fraction, double parent_one_fraction,
               int parent_feature, double condition_fraction) {
    if (condition_fraction == 0) return;
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    if (condition_ == Condition::kNone || parent_feature != condition_feature_) {
      extend_path(path, depth, parent_zero_fraction, parent_one_fraction,
                  parent_feature);
    }

    const auto& node = tree_.nodes[node_index];
    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const auto& el = path[i];
        phi_[static_cast<std::size_t>(el.feature)] +=
            w * (el.one_fraction - el.zero_fraction) * node.value *
            condition_fraction;
      }
      return;
    }

    const int split = node.feature;
    const bool left_hot = node.goes_left(x_[static_cast<std::size_t>(split)]);
    const auto hot = static_cast<std::size_t>(left_hot ? node.left : node.right);
    const auto cold = static_cast<std::size_t>(left_hot ? node.right : node.left);
    const double hot_zero_fraction = tree_.nodes[hot].cover / node.cover;
    const double cold_zero_fraction = tree_.nodes[cold].cover / node.cover;
    double incoming_zero_fraction = 1;
    double incoming_one_fraction = 1;

    // A feature already on the path is unwound and re-extended here.
    int path_index = 0;
    for (; path_index <= depth; ++path_index) {
      if (path[path_index].feature == split) break;
    }
    if (path_index != depth + 1) {
      incoming_zero_fraction = path[path_index].zero_fraction;
      incoming_one_fraction = path[path_index].one_fraction;
      unwind_path(path, depth, path_index);
      depth -= 1;
    }

    double hot_condition_fraction = condition_fraction;
    double cold_condition_fraction = condition_fraction;
    if (condition_ == Condition::kPresent && split == condition_feature_) {
      cold_condition_fraction = 0;
      depth -= 1;
    } else if (condition_ == Condition::kAbsent && split == condition_feature_) {
      hot_condition_fraction *= hot_zero_fraction;
      cold_condition_fraction *= cold_zero_fraction;
      depth -= 1;
    }

    recurse(hot, depth + 1, path, hot_zero_fraction * incoming_zero_fraction,
            incoming_one_fraction, split, hot_condition_fraction);
    recurse(cold, depth + 1, path, cold_zero_fraction * incoming_zero_fraction,
            0, split, cold_condition_fraction);
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::span<double> phi_;
  Condition condition_;
  int condition_feature_;
  std::vector<PathElement> storage_;
};

bool tree_uses_feature(const Tree& tree, int feature) {
  return std::any_of(tree.nodes.begin(), tree.nodes.end(),
                     [feature](const TreeNode& n) { return n.feature == feature; });
}

void check_schema(const TreeEnsemble& model, const Dataset& ds) {
  if (!(model.schema() == ds.schema())) {
    throw AttributionError("dataset schema does not match the model schema");
  }
}

void check_input(const TreeEnsemble& model, std::span<const double> x) {
  if (x.size() != model.schema().size()) {
    throw AttributionError("expected " + std::to_string(model.schema().size()) +
                           " features, got " + std::to_string(x.size()));
  }
}

std::vector<std::uint64_t> ids_of(const Dataset& ds) {
  std::vector<std::uint64_t> ids;
  ids.reserve(ds.size());
  for (const auto& s : ds.samples()) ids.push_back(s.id);
  return ids;
}

}  // namespace

double conditional_expectation(const TreeEnsemble& model,
                               std::span<const double> x,
                               const std::vector<bool>& in_set) {
  if (in_set.size() != model.schema().size()) {
    throw AttributionError("coalition mask has the wrong size");
  }
  double v = model.base_score();
  for (const auto& t : model.trees()) v += tree_expectation(t, 0, x, in_set);
  return v;
}

double expected_value(const TreeEnsemble& model) {
  const std::vector<bool> empty(model.schema().size(), false);
  const std::vector<double> x(model.schema().size(), 0.0);
  return conditional_expectation(model, x, empty);
}

std::vector<double> shap_brute_force(const TreeEnsemble& model,
                                     std::span<const double> x) {
  const std::size_t m = model.schema().size();
  if (m > kBruteForceShapMaxFeatures) {
    throw AttributionError("brute-force Shapley values are limited to " +
                           std::to_string(kBruteForceShapMaxFeatures) +
                           " features");
  }
  check_input(model, x);
  const auto v = all_coalition_values(model, x);
  const auto fact = factorials(m);
  std::vector<double> phi(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      const double weight = fact[size] * fact[m - size - 1] / fact[m];
      phi[j] += weight * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

std::vector<double> interaction_brute_force(const TreeEnsemble& model,
                                            std::span<const double> x) {
  const std::size_t m = model.schema().size();
  if (m > kBruteForceInteractionMaxFeatures) {
    throw AttributionError("brute-force interaction values are limited to " +
                           std::to_string(kBruteForceInteractionMaxFeatures) +
                           " features");
  }
  check_input(model, x);
  const auto v = all_coalition_values(model, x);
  const auto fact = factorials(m);
  std::vector<double> out(m * m, 0.0);
  if (m < 2) {
    if (m == 1) out[0] = v[1] - v[0];
    return out;
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      const std::size_t bj = std::size_t{1} << j;
      const std::size_t bk = std::size_t{1} << k;
      double total = 0;
      for (std::size_t s = 0; s < v.size(); ++s) {
        if (s & (bj | bk)) continue;
        const auto size = static_cast<std::size_t>(std::popcount(s));
        const double weight =
            fact[size] * fact[m - size - 2] / (2.0 * fact[m - 1]);
        total += weight * (v[s | bj | bk] - v[s | bj] - v[s | bk] + v[s]);
      }
      out[j * m + k] = total;
      out[k * m + j] = total;
    }
  }
  const auto phi = shap_brute_force(model, x);
  for (std::size_t j = 0; j < m; ++j) {
    double off = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) off += out[j * m + k];
    }
    out[j * m + j] = phi[j] - off;
  }
  return out;
}

std::vector<double> shap_for_input(const TreeEnsemble& model,
                                   std::span<const double> x) {
  check_input(model, x);
  std::vector<double> phi(model.schema().size(), 0.0);
  for (const auto& tree : model.trees()) {
    PathShap(tree, x, phi, Condition::kNone, -1).run();
  }
  return phi;
}

std::vector<double> interaction_row(const TreeEnsemble& model,
                                    std::span<const double> x,
                                    std::size_t feature) {
  check_input(model, x);
  const std::size_t m = model.schema().size();
  if (feature >= m) throw AttributionError("feature index out of range");
  std::vector<double> on(m, 0.0), off(m, 0.0);
  const int f = static_cast<int>(feature);
  for (const auto& tree : model.trees()) {
    if (!tree_uses_feature(tree, f)) continue;
    PathShap(tree, x, on, Condition::kPresent, f).run();
    PathShap(tree, x, off, Condition::kAbsent, f).run();
  }
  std::vector<double> row(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (k != feature) row[k] = (on[k] - off[k]) / 2;
  }
  const auto phi = shap_for_input(model, x);
  double off_sum = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (k != feature) off_sum += row[k];
  }
  row[feature] = phi[feature] - off_sum;
  return row;
}

std::vector<double> interactions_for_input(const TreeEnsemble& model,
                                           std::span<const double> x) {
  check_input(model, x);
  const std::size_t m = model.schema().size();
  const auto phi = shap_for_input(model, x);
  std::vector<double> raw(m * m, 0.0);
  std::vector<double> on(m), off(m);
  for (std::size_t j = 0; j < m; ++j) {
    const int f = static_cast<int>(j);
    std::fill(on.begin(), on.end(), 0.0);
    std::fill(off.begin(), off.end(), 0.0);
    bool used = false;
    for (const auto& tree : model.trees()) {
      if (!tree_uses_feature(tree, f)) continue;
      used = true;
      PathShap(tree, x, on, Condition::kPresent, f).run();
      PathShap(tree, x, off, Condition::kAbsent, f).run();
    }
    if (!used) continue;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) raw[j * m + k] = (on[k] - off[k]) / 2;
    }
  }
  std::vector<double> out(m * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      const double sym = (raw[j * m + k] + raw[k * m + j]) / 2;
      out[j * m + k] = sym;
      out[k * m + j] = sym;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    double off_sum = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != j) off_sum += out[j * m + k];
    }
    out[j * m + j] = phi[j] - off_sum;
  }
  return out;
}

ShapMatrix shap_values(const TreeEnsemble& model, const Dataset& ds) {
  check_schema(model, ds);
  ShapMatrix out;
  out.num_samples = ds.size();
  out.num_features = ds.schema().size();
  out.values.assign(out.num_samples * out.num_features, 0.0);
  out.base_value = expected_value(model);
  out.sample_ids = ids_of(ds);
  out.feature_names = ds.schema().names();
  parallel_for(ds.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto phi = shap_for_input(model, ds[i].features);
      std::copy(phi.begin(), phi.end(),
                out.values.begin() + static_cast<long>(i * out.num_features));
    }
  });
  return out;
}

InteractionTensor interaction_values(const TreeEnsemble& model,
                                     const Dataset& ds) {
  check_schema(model, ds);
  InteractionTensor out;
  out.num_samples = ds.size();
  out.num_features = ds.schema().size();
  const std::size_t mm = out.num_features * out.num_features;
  out.values.assign(out.num_samples * mm, 0.0);
  out.base_value = expected_value(model);
  out.sample_ids = ids_of(ds);
  out.feature_names = ds.schema().names();
  parallel_for(ds.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto matrix = interactions_for_input(model, ds[i].features);
      std::copy(matrix.begin(), matrix.end(),
                out.values.begin() + static_cast<long>(i * mm));
    }
  });
  return out;
}

ShapMatrix main_effects(const InteractionTensor& t) {
  ShapMatrix out;
  out.num_samples = t.num_samples;
  out.num_features = t.num_features;
  out.base_value = t.base_value;
  out.sample_ids = t.sample_ids;
  out.feature_names = t.feature_names;
  out.values.resize(t.num_samples * t.num_features);
  for (std::size_t i = 0; i < t.num_samples; ++i) {
    for (std::size_t j = 0; j < t.num_features; ++j) {
      out.values[i * t.num_features + j] = t.at(i, j, j);
    }
  }
  return out;
}

double max_local_accuracy_error(const TreeEnsemble& model, const Dataset& ds,
                                const ShapMatrix& m) {
  if (m.num_samples != ds.size()) {
    throw AttributionError("attribution matrix does not match the dataset");
  }
  double worst = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double total = m.base_value;
    for (const double v : m.row(i)) total += v;
    const double margin = model.margin(ds[i].features);
    worst = std::max(worst, std::abs(total - margin) / std::max(1.0, std::abs(margin)));
  }
  return worst;
}

void write_shap_csv(const ShapMatrix& m, std::ostream& out) {
  out << "sample_id,feature,value\n";
  for (std::size_t i = 0; i < m.num_samples; ++i) {
    for (std::size_t j = 0; j < m.num_features; ++j) {
      out << m.sample_ids[i] << ',' << m.feature_names[j] << ','
          << format_double(m.at(i, j)) << '\n';
    }
  }
}

void write_interactions_csv(const InteractionTensor& t, std::ostream& out) {
  out << "sample_id,feature,feature_2,value\n";
  for (std::size_t i = 0; i < t.num_samples; ++i) {
    for (std::size_t j = 0; j < t.num_features; ++j) {
      for (std::size_t k = 0; k < t.num_features; ++k) {
        out << t.sample_ids[i] << ',' << t.feature_names[j] << ','
            << t.feature_names[k] << ',' << format_double(t.at(i, j, k)) << '\n';
      }
    }
  }
}

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

void write_le_doubles(std::ostream& out, const std::vector<double>& column) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(column.data()),
              static_cast<std::streamsize>(column.size() * sizeof(double)));
  } else {
    for (const double v : column) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      bits = __builtin_bswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

std::vector<double> read_le_doubles(std::istream& in, std::size_t count) {
  std::vector<double> out(count);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw AttributionError("binary attribution dump is truncated");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) {
      v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
    }
  }
  return out;
}

// Writes the columns of a row-major [n, cols] block.
void write_columns(const std::string& path, const std::vector<double>& values,
                   std::size_t n, std::size_t cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  std::vector<double> column(n);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = values[i * cols + c];
    write_le_doubles(out, column);
  }
}

std::vector<double> read_columns(const std::string& path, std::size_t n,
                                 std::size_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<double> values(n * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto column = read_le_doubles(in, n);
    for (std::size_t i = 0; i < n; ++i) values[i * cols + c] = column[i];
  }
  return values;
}

void write_sidecar(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << doc.dump(1) << '\n';
}

nlohmann::json read_sidecar(const std::string& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw AttributionError("cannot parse '" + path + "': " + e.what());
  }
  if (doc.value("kind", std::string()) != kind) {
    throw AttributionError("'" + path + "' is not a " + kind + " sidecar");
  }
  return doc;
}

}  // namespace

void save_shap_binary(const ShapMatrix& m, const std::string& prefix) {
  write_columns(prefix + ".bin", m.values, m.num_samples, m.num_features);
  write_sidecar(prefix + ".json",
                {{"kind", "shap_matrix"},
                 {"dtype", "float64"},
                 {"byte_order", "little"},
                 {"layout", "column_major"},
                 {"shape", {m.num_samples, m.num_features}},
                 {"base_value", m.base_value},
                 {"features", m.feature_names},
                 {"sample_ids", m.sample_ids}});
}

ShapMatrix load_shap_binary(const std::string& prefix) {
  const auto doc = read_sidecar(prefix + ".json", "shap_matrix");
  ShapMatrix m;
  try {
    m.num_samples = doc.at("shape").at(0).get<std::size_t>();
    m.num_features = doc.at("shape").at(1).get<std::size_t>();
    m.base_value = doc.at("base_value").get<double>();
    m.feature_names = doc.at("features").get<std::vector<std::string>>();
    m.sample_ids = doc.at("sample_ids").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw AttributionError(std::string("malformed SHAP sidecar: ") + e.what());
  }
  m.values = read_columns(prefix + ".bin", m.num_samples, m.num_features);
  return m;
}

void save_interactions_binary(const InteractionTensor& t,
                              const std::string& prefix) {
  write_columns(prefix + ".bin", t.values, t.num_samples,
                t.num_features * t.num_features);
  write_sidecar(prefix + ".json",
                {{"kind", "interaction_tensor"},
                 {"dtype", "float64"},
                 {"byte_order", "little"},
                 {"layout", "column_major"},
                 {"shape", {t.num_samples, t.num_features, t.num_features}},
                 {"base_value", t.base_value},
                 {"features", t.feature_names},
                 {"sample_ids", t.sample_ids}});
}

InteractionTensor load_interactions_binary(const std::string& prefix) {
  const auto doc = read_sidecar(prefix + ".json", "interaction_tensor");
  InteractionTensor t;
  try {
    t.num_samples = doc.at("shape").at(0).get<std::size_t>();
    t.num_features = doc.at("shape").at(1).get<std::size_t>();
    t.base_value = doc.at("base_value").get<double>();
    t.feature_names = doc.at("features").get<std::vector<std::string>>();
    t.sample_ids = doc.at("sample_ids").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw AttributionError(std::string("malformed interaction sidecar: ") + e.what());
  }
  t.values = read_columns(prefix + ".bin", t.num_samples,
                          t.num_features * t.num_features);
  return t;
}

}  // namespace surveyshap
