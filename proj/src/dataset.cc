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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace surveyshap {

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumeric:
      return "numeric";
    case FeatureKind::kBinary:
      return "binary";
    case FeatureKind::kCategorical:
      return "categorical";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "numeric") return FeatureKind::kNumeric;
  if (name == "binary") return FeatureKind::kBinary;
  if (name == "categorical") return FeatureKind::kCategorical;
  throw SchemaError("unknown feature kind '" + std::string(name) + "'");
}

FeatureSpec FeatureSpec::numeric(std::string name, double min, double max) {
  FeatureSpec s;
  s.name = std::move(name);
  s.kind = FeatureKind::kNumeric;
  s.min = min;
  s.max = max;
  return s;
}

FeatureSpec FeatureSpec::binary(std::string name, std::string group) {
  FeatureSpec s;
  s.name = std::move(name);
  s.kind = FeatureKind::kBinary;
  s.min = 0;
  s.max = 1;
  s.one_hot_group = std::move(group);
  return s;
}

FeatureSpec FeatureSpec::categorical(std::string name, int categories) {
  FeatureSpec s;
  s.name = std::move(name);
  s.kind = FeatureKind::kCategorical;
  s.categories = categories;
  s.min = 0;
  s.max = categories - 1;
  return s;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
  if (features_.empty()) throw SchemaError("schema has no features");
  std::set<std::string> seen;
  for (auto& f : features_) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (!seen.insert(f.name).second) {
      throw SchemaError("duplicate feature name '" + f.name + "'");
    }
    switch (f.kind) {
      case FeatureKind::kNumeric:
        if (!(f.min <= f.max) || !std::isfinite(f.min) ||
            !std::isfinite(f.max)) {
          throw SchemaError("feature '" + f.name + "' has an invalid range");
        }
        break;
      case FeatureKind::kBinary:
        f.min = 0;
        f.max = 1;
        break;
      case FeatureKind::kCategorical:
        if (f.categories < 1 || f.categories > 256) {
          throw SchemaError("feature '" + f.name +
                            "' needs between 1 and 256 categories");
        }
        f.min = 0;
        f.max = f.categories - 1;
        break;
    }
    if (!f.one_hot_group.empty() && f.kind != FeatureKind::kBinary) {
      throw SchemaError("one-hot feature '" + f.name + "' must be binary");
    }
  }
}

FeatureSchema FeatureSchema::survey() {
  return FeatureSchema({
      FeatureSpec::numeric("age", 21, 49),
      FeatureSpec::numeric("years_of_education", 0, 20),
      FeatureSpec::categorical("state", 36),
      FeatureSpec::binary("residence_type"),
      FeatureSpec::categorical("household_religion", 10),
      FeatureSpec::numeric("wealth_index", 0, 4),
      FeatureSpec::numeric("household_members", 1, 39),
      FeatureSpec::numeric("freq_of_tv", 0, 3),
      FeatureSpec::numeric("total_children", 0, 15),
      FeatureSpec::numeric("children_below_5", 0, 9),
      FeatureSpec::binary("anemic"),
      FeatureSpec::binary("obese"),
      FeatureSpec::binary("caste_general", "caste"),
      FeatureSpec::binary("caste_scst", "caste"),
      FeatureSpec::binary("caste_obc", "caste"),
      FeatureSpec::binary("caste_unknown", "caste"),
  });
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("schema has no feature named '" + std::string(name) + "'");
}

std::optional<std::string> FeatureSchema::check_row(
    std::span<const double> row) const {
  if (row.size() != features_.size()) {
    return "expected " + std::to_string(features_.size()) + " features, got " +
           std::to_string(row.size());
  }
  std::map<std::string, int> group_hot;
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const auto& f = features_[j];
    const double v = row[j];
    if (!std::isfinite(v)) return "feature '" + f.name + "' is not finite";
    switch (f.kind) {
      case FeatureKind::kNumeric:
        if (v < f.min || v > f.max) {
          return "feature '" + f.name + "' value " + format_double(v) +
                 " outside [" + format_double(f.min) + ", " +
                 format_double(f.max) + "]";
        }
        break;
      case FeatureKind::kBinary:
        if (v != 0.0 && v != 1.0) {
          return "binary feature '" + f.name + "' has value " +
                 format_double(v);
        }
        break;
      case FeatureKind::kCategorical:
        if (v != std::floor(v) || v < 0 || v >= f.categories) {
          return "categorical feature '" + f.name + "' has invalid code " +
                 format_double(v) + " (expected 0.." +
                 std::to_string(f.categories - 1) + ")";
        }
        break;
    }
    if (!f.one_hot_group.empty()) {
      group_hot[f.one_hot_group] += v == 1.0 ? 1 : 0;
    }
  }
  for (const auto& [group, hot] : group_hot) {
    if (hot != 1) {
      return "one-hot invariant violated for group '" + group + "': " +
             std::to_string(hot) + " features set";
    }
  }
  return std::nullopt;
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json item = {{"name", f.name},
                           {"kind", std::string(feature_kind_name(f.kind))}};
    if (f.kind == FeatureKind::kNumeric) {
      item["range"] = {f.min, f.max};
    } else if (f.kind == FeatureKind::kCategorical) {
      item["categories"] = f.categories;
    }
    if (!f.one_hot_group.empty()) item["one_hot_group"] = f.one_hot_group;
    features.push_back(std::move(item));
  }
  return {{"features", features}};
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& doc) {
  try {
    std::vector<FeatureSpec> specs;
    for (const auto& item : doc.at("features")) {
      FeatureSpec s;
      s.name = item.at("name").get<std::string>();
      s.kind = parse_feature_kind(item.at("kind").get<std::string>());
      if (s.kind == FeatureKind::kNumeric) {
        const auto& range = item.at("range");
        s.min = range.at(0).get<double>();
        s.max = range.at(1).get<double>();
      } else if (s.kind == FeatureKind::kCategorical) {
        s.categories = item.at("categories").get<int>();
      }
      s.one_hot_group = item.value("one_hot_group", std::string());
      specs.push_back(std::move(s));
    }
    return FeatureSchema(std::move(specs));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
}

FeatureSchema load_schema_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  try {
    return FeatureSchema::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("cannot parse schema file '" + path + "': " + e.what());
  }
}

std::string_view occupation_name(Occupation o) {
  switch (o) {
    case Occupation::kUnemployed:
      return "unemployed";
    case Occupation::kBlue:
      return "blue";
    case Occupation::kWhite:
      return "white";
  }
  return "unknown";
}

std::optional<Occupation> parse_occupation(std::string_view name) {
  if (name == "unemployed") return Occupation::kUnemployed;
  if (name == "blue") return Occupation::kBlue;
  if (name == "white") return Occupation::kWhite;
  return std::nullopt;
}

bool Sample::label(Experiment e) const {
  switch (e) {
    case Experiment::kWork:
      return work_status();
    case Experiment::kBlue:
      return blue_collar();
    case Experiment::kWhite:
      return white_collar();
  }
  return false;
}

Dataset::Dataset(FeatureSchema schema, std::vector<Sample> samples,
                 Provenance provenance)
    : schema_(std::move(schema)),
      samples_(std::move(samples)),
      provenance_(provenance) {
  if (samples_.empty()) throw Error("dataset is empty");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (auto err = schema_.check_row(s.features)) throw RowError(i, *err);
    if (!(s.weight > 0) || !std::isfinite(s.weight)) {
      throw RowError(i, "weight must be positive, got " +
                            format_double(s.weight));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (const std::size_t i : indices) out.push_back(samples_.at(i));
  return Dataset(schema_, std::move(out), provenance_);
}

std::size_t Dataset::count_positive(Experiment e) const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(),
                    [e](const Sample& s) { return s.label(e); }));
}

std::vector<double> Dataset::column(std::size_t feature) const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.features.at(feature));
  return out;
}

std::vector<double> Dataset::weights() const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.weight);
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
      f.remove_prefix(1);
    }
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) {
      f.remove_suffix(1);
    }
  }
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const FeatureSchema& schema,
                 std::string_view label_column,
                 std::string_view weight_column) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV input has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  auto column_of = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    return std::nullopt;
  };
  auto require = [&](std::string_view name) {
    if (auto c = column_of(name)) return *c;
    throw SchemaError("CSV header is missing column '" + std::string(name) +
                      "'");
  };

  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.size());
  for (const auto& f : schema.features()) feature_cols.push_back(require(f.name));
  const std::size_t label_col = require(label_column);
  const std::size_t weight_col = require(weight_column);
  const auto id_col = column_of("sample_id");

  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw RowError(row, "expected " + std::to_string(header.size()) +
                              " fields, got " + std::to_string(fields.size()));
    }
    Sample s;
    s.id = row;
    if (id_col) {
      const auto text = fields[*id_col];
      std::uint64_t id = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), id);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw RowError(row, "invalid sample_id '" + std::string(text) + "'");
      }
      s.id = id;
    }
    s.features.reserve(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto text = fields[feature_cols[j]];
      if (text.empty()) {
        throw RowError(row, "missing value for '" + schema[j].name + "'");
      }
      const auto v = parse_number(text);
      if (!v) {
        throw RowError(row, "non-numeric value '" + std::string(text) +
                                "' for '" + schema[j].name + "'");
      }
      s.features.push_back(*v);
    }
    if (auto err = schema.check_row(s.features)) throw RowError(row, *err);

    const auto occ = parse_occupation(fields[label_col]);
    if (!occ) {
      throw RowError(row, "invalid " + std::string(label_column) + " '" +
                              std::string(fields[label_col]) +
                              "' (expected unemployed, blue or white)");
    }
    s.occupation = *occ;

    const auto w = parse_number(fields[weight_col]);
    if (!w) {
      throw RowError(row, "non-numeric weight '" +
                              std::string(fields[weight_col]) + "'");
    }
    if (!(*w > 0) || !std::isfinite(*w)) {
      throw RowError(row, "weight must be positive, got " + format_double(*w));
    }
    s.weight = *w;
    samples.push_back(std::move(s));
    ++row;
  }
  if (samples.empty()) throw Error("CSV input has no data rows");
  return Dataset(schema, std::move(samples), Provenance::kIngested);
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 std::string_view label_column,
                 std::string_view weight_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path + "'");
  return read_csv(in, schema, label_column, weight_column);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << "sample_id";
  for (const auto& f : ds.schema().features()) out << ',' << f.name;
  out << ",occupation,weight\n";
  for (const auto& s : ds.samples()) {
    out << s.id;
    for (const double v : s.features) out << ',' << format_double(v);
    out << ',' << occupation_name(s.occupation) << ','
        << format_double(s.weight) << '\n';
  }
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path + "'");
  write_csv(ds, out);
}

double class_balance(const Dataset& ds, Experiment e) {
  return static_cast<double>(ds.count_positive(e)) /
         static_cast<double>(ds.size());
}

std::vector<FeatureSummary> summary_stats(const Dataset& ds) {
  const auto& schema = ds.schema();
  const double n = static_cast<double>(ds.size());
  std::vector<FeatureSummary> out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    FeatureSummary fs;
    fs.name = schema[j].name;
    fs.kind = schema[j].kind;
    if (schema[j].kind == FeatureKind::kCategorical) {
      fs.code_counts.assign(schema[j].categories, 0);
      for (const auto& s : ds.samples()) {
        ++fs.code_counts[static_cast<std::size_t>(s.features[j])];
      }
    } else {
      double sum = 0;
      for (const auto& s : ds.samples()) sum += s.features[j];
      const double mean = sum / n;
      double ss = 0;
      for (const auto& s : ds.samples()) {
        const double d = s.features[j] - mean;
        ss += d * d;
      }
      fs.mean = mean;
      fs.std_dev = ds.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    }
    out.push_back(std::move(fs));
  }
  return out;
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw SamplingError("test_fraction must lie in (0, 1), got " +
                        format_double(test_fraction));
  }
  if (folds < 2) {
    throw SamplingError("folds must be at least 2, got " +
                        std::to_string(folds));
  }
}

namespace {

struct ClassIndices {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
};

ClassIndices partition_by_class(const Dataset& ds, Experiment e) {
  ClassIndices c;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds[i].label(e) ? c.positive : c.negative).push_back(i);
  }
  return c;
}

// Guards floor() against products such as 0.29 * 100 = 28.999999999999996.
std::size_t floor_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

std::vector<std::size_t> weighted_sample_indices(std::span<const double> weights,
                                                 std::size_t k,
                                                 std::uint64_t seed) {
  if (k > weights.size()) {
    throw SamplingError("cannot draw " + std::to_string(k) +
                        " samples without replacement from " +
                        std::to_string(weights.size()));
  }
  Rng rng(seed);
  std::vector<double> keys(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0)) {
      throw SamplingError("weight " + std::to_string(i) + " is not positive");
    }
    keys[i] = std::log(rng.uniform_open_zero()) / weights[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_key = [&keys](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] > keys[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), by_key);
  order.resize(k);
  return order;
}

TrainTestSplit stratified_split(const Dataset& ds, Experiment e,
                                const SplitSpec& spec) {
  spec.validate();
  const auto classes = partition_by_class(ds, e);
  if (classes.positive.empty() || classes.negative.empty()) {
    throw SamplingError("stratified split needs both classes present");
  }
  std::vector<bool> in_test(ds.size(), false);
  std::uint64_t stream = 0;
  for (const auto* members : {&classes.positive, &classes.negative}) {
    const std::size_t take = floor_count(spec.test_fraction, members->size());
    if (take == 0) {
      throw SamplingError(
          "class with " + std::to_string(members->size()) +
          " samples is too small for one test member at fraction " +
          format_double(spec.test_fraction));
    }
    std::vector<double> w;
    w.reserve(members->size());
    for (const std::size_t i : *members) {
      w.push_back(spec.weighted ? ds[i].weight : 1.0);
    }
    const auto picked =
        weighted_sample_indices(w, take, derive_seed(spec.seed, stream++));
    for (const std::size_t p : picked) in_test[(*members)[p]] = true;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_test[i] ? test_idx : train_idx).push_back(i);
  }
  if (train_idx.empty()) throw SamplingError("split leaves no training data");
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

std::vector<int> stratified_fold_assignment(const Dataset& ds, Experiment e,
                                            const SplitSpec& spec) {
  spec.validate();
  auto classes = partition_by_class(ds, e);
  const auto folds = static_cast<std::size_t>(spec.folds);
  for (const auto* members : {&classes.positive, &classes.negative}) {
    if (members->size() < folds) {
      throw SamplingError("a class has " + std::to_string(members->size()) +
                          " samples, fewer than " + std::to_string(folds) +
                          " folds");
    }
  }
  std::vector<int> assignment(ds.size(), -1);
  std::uint64_t stream = 0;
  for (auto* members : {&classes.positive, &classes.negative}) {
    Rng rng(derive_seed(derive_seed(spec.seed, "kfold"), stream++));
    // Fisher-Yates.
    for (std::size_t i = members->size(); i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap((*members)[i - 1], (*members)[j]);
    }
    for (std::size_t p = 0; p < members->size(); ++p) {
      assignment[(*members)[p]] = static_cast<int>(p % folds);
    }
  }
  return assignment;
}

std::vector<Fold> kfold(const Dataset& ds, Experiment e, const SplitSpec& spec) {
  const auto assignment = stratified_fold_assignment(ds, e, spec);
  std::vector<Fold> out;
  out.reserve(static_cast<std::size_t>(spec.folds));
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<std::size_t> train_idx, valid_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (assignment[i] == f ? valid_idx : train_idx).push_back(i);
    }
    out.push_back({ds.subset(train_idx), ds.subset(valid_idx)});
  }
  return out;
}

Dataset weighted_subsample(const Dataset& ds, std::size_t k,
                           std::uint64_t seed) {
  if (k == 0) throw SamplingError("subsample size must be positive");
  const auto w = ds.weights();
  const auto picked = weighted_sample_indices(w, k, seed);
  return ds.subset(picked);
}

std::vector<Dataset> bootstrap_subsets(const Dataset& ds, int count,
                                       double fraction, std::uint64_t seed) {
  if (count < 1) throw SamplingError("bootstrap count must be at least 1");
  if (!(fraction > 0 && fraction <= 1)) {
    throw SamplingError("bootstrap fraction must lie in (0, 1]");
  }
  const std::size_t k = floor_count(fraction, ds.size());
  if (k == 0) throw SamplingError("bootstrap subsets would be empty");
  std::vector<Dataset> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(weighted_subsample(
        ds, k, derive_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

}  // namespace surveyshap
