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

#include "surveyshap/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace surveyshap {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 4> kCasteFeatures = {
    "caste_general", "caste_scst", "caste_obc", "caste_unknown"};

bool is_caste(std::string_view name) {
  return std::find(kCasteFeatures.begin(), kCasteFeatures.end(), name) !=
         kCasteFeatures.end();
}

struct Moments {
  double mean = 0.0;
  double std_dev = 0.0;
};

Moments moments(const std::vector<double>& p, int lo) {
  Moments m;
  for (std::size_t k = 0; k < p.size(); ++k) m.mean += p[k] * (lo + static_cast<double>(k));
  double var = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = lo + static_cast<double>(k) - m.mean;
    var += p[k] * d * d;
  }
  m.std_dev = std::sqrt(var);
  return m;
}

std::vector<double> gaussian_weights(int lo, int hi, double mu, double sigma) {
  std::vector<double> logw;
  for (int k = lo; k <= hi; ++k) {
    const double z = (k - mu) / sigma;
    logw.push_back(-0.5 * z * z);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> p(logw.size());
  double total = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logw[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t draw_index(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

std::vector<double> cumulative_of(std::vector<double> p) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  double run = 0;
  for (double& v : p) {
    run += v / total;
    v = run;
  }
  return p;
}

// Model coefficients laid out by schema index.
struct CompiledModel {
  std::vector<double> coef;
  std::vector<std::vector<double>> categorical;
  std::vector<double> center;
  std::vector<double> scale;
  std::size_t age = 0;
  std::size_t scst = 0;
  std::size_t wealth = 0;
  std::size_t education = 0;
  double caste_age = 0.0;
  double wealth_education = 0.0;

  double offset(std::span<const double> row) const {
    double eta = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!categorical[j].empty()) {
        eta += categorical[j][static_cast<std::size_t>(row[j])];
      } else if (coef[j] != 0.0) {
        eta += coef[j] * (row[j] - center[j]) / scale[j];
      }
    }
    eta += caste_age * row[scst] * (row[age] - 35.0) / 14.0;
    if (wealth_education != 0.0) {
      eta += wealth_education * (row[wealth] - center[wealth]) / scale[wealth] *
             (row[education] - center[education]) / scale[education];
    }
    return eta;
  }
};

CompiledModel compile(const GeneratorSpec& spec, const LogitModel& model) {
  const FeatureSchema schema = FeatureSchema::survey();
  CompiledModel c;
  const std::size_t m = schema.size();
  c.coef.assign(m, 0.0);
  c.categorical.assign(m, {});
  c.center.assign(m, 0.0);
  c.scale.assign(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (schema[j].kind == FeatureKind::kNumeric) {
      const auto& marginal = spec.numeric.at(schema[j].name);
      c.center[j] = marginal.mean;
      c.scale[j] = marginal.std_dev;
    }
  }
  for (const auto& [name, beta] : model.linear) c.coef[schema.index_of(name)] = beta;
  for (const auto& [name, effects] : model.categorical) {
    c.categorical[schema.index_of(name)] = effects;
  }
  c.age = schema.index_of("age");
  c.scst = schema.index_of("caste_scst");
  c.wealth = schema.index_of("wealth_index");
  c.education = schema.index_of("years_of_education");
  c.caste_age = model.caste_age;
  c.wealth_education = model.wealth_education;
  return c;
}

// Finds b0 with mean_i f(b0, i) == target, where f is increasing in b0.
template <typename F>
double calibrate_intercept(F&& mean_rate, double target, const char* what) {
  double lo = -40.0;
  double hi = 40.0;
  if (mean_rate(lo) > target || mean_rate(hi) < target) {
    throw GenerationError(std::string("target balance ") + format_double(target) +
                          " for " + what + " is unreachable");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < target ? lo : hi) = mid;
  }
  const double b0 = 0.5 * (lo + hi);
  if (std::abs(mean_rate(b0) - target) > 1e-6) {
    throw GenerationError(std::string("could not calibrate ") + what +
                          " balance to " + format_double(target));
  }
  return b0;
}

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw GenerationError(what + " is not finite");
}

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw GenerationError(what + " must lie in [0, 1]");
  }
}

void validate_model(const LogitModel& model, const FeatureSchema& schema,
                    const std::string& label) {
  check_finite(model.intercept, label + " intercept");
  check_finite(model.caste_age, label + " caste_age");
  check_finite(model.wealth_education, label + " wealth_education");
  for (const auto& [name, beta] : model.linear) {
    const auto j = schema.find(name);
    if (!j) throw GenerationError(label + ": unknown feature '" + name + "'");
    if (schema[*j].kind == FeatureKind::kCategorical) {
      throw GenerationError(label + ": '" + name +
                            "' is categorical; give per-code effects");
    }
    check_finite(beta, label + " coefficient of " + name);
  }
  for (const auto& [name, effects] : model.categorical) {
    const auto j = schema.find(name);
    if (!j || schema[*j].kind != FeatureKind::kCategorical) {
      throw GenerationError(label + ": '" + name + "' is not a categorical feature");
    }
    if (effects.size() != static_cast<std::size_t>(schema[*j].categories)) {
      throw GenerationError(label + ": '" + name + "' needs " +
                            std::to_string(schema[*j].categories) + " effects");
    }
    for (const double v : effects) check_finite(v, label + " effect of " + name);
  }
  if (model.target_balance) {
    const double t = *model.target_balance;
    if (!(t > 0.0 && t < 1.0)) {
      throw GenerationError(label + " target balance must lie in (0, 1)");
    }
  }
}

json model_to_json(const LogitModel& m) {
  json j;
  j["intercept"] = m.intercept;
  j["linear"] = m.linear;
  j["categorical"] = m.categorical;
  j["caste_age"] = m.caste_age;
  j["wealth_education"] = m.wealth_education;
  j["target_balance"] = m.target_balance ? json(*m.target_balance) : json(nullptr);
  return j;
}

void model_from_json(const json& j, LogitModel& m, const std::string& label) {
  if (!j.is_object()) throw GenerationError(label + " must be an object");
  static const std::set<std::string> keys = {"intercept", "linear", "categorical",
                                             "caste_age", "wealth_education",
                                             "target_balance"};
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw GenerationError(label + ": unknown key '" + k + "'");
  }
  if (j.contains("intercept")) m.intercept = j["intercept"].get<double>();
  if (j.contains("linear")) m.linear = j["linear"].get<std::map<std::string, double>>();
  if (j.contains("categorical")) {
    m.categorical = j["categorical"].get<std::map<std::string, std::vector<double>>>();
  }
  if (j.contains("caste_age")) m.caste_age = j["caste_age"].get<double>();
  if (j.contains("wealth_education")) {
    m.wealth_education = j["wealth_education"].get<double>();
  }
  if (j.contains("target_balance")) {
    const auto& t = j["target_balance"];
    m.target_balance = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
  }
}

}  // namespace

GeneratorSpec GeneratorSpec::defaults() {
  GeneratorSpec s;
  s.numeric = {
      {"age", {33.765, 8.153}},
      {"years_of_education", {6.301, 5.401}},
      {"wealth_index", {2.088, 1.389}},
      {"household_members", {5.546, 2.553}},
      {"freq_of_tv", {2.047, 1.256}},
      {"total_children", {2.426, 1.749}},
      {"children_below_5", {0.632, 0.907}},
  };
  s.binary_rates = {{"residence_type", 0.309}, {"anemic", 0.520}, {"obese", 0.234}};

  std::vector<double> state_effects(36);
  for (std::size_t k = 0; k < state_effects.size(); ++k) {
    state_effects[k] = 0.9 * std::sin(1.7 * static_cast<double>(k) + 0.3);
  }
  s.work.linear = {
      {"age", 0.6},           {"years_of_education", -0.25},
      {"wealth_index", -0.6}, {"children_below_5", -0.5},
      {"total_children", 0.15}, {"household_members", -0.1},
      {"residence_type", -0.4}, {"caste_scst", 1.2},
      {"caste_general", -0.15},
  };
  s.work.categorical = {{"state", state_effects}};
  s.work.caste_age = 1.0;
  s.work.target_balance = 0.341;

  s.white.linear = {
      {"years_of_education", 1.2}, {"wealth_index", 0.7},
      {"residence_type", 0.5},     {"caste_scst", -0.3},
      {"caste_general", 0.3},
  };
  s.white.caste_age = -2.5;
  s.white.target_balance = 0.058;
  return s;
}

void GeneratorSpec::validate() const {
  if (n == 0) throw GenerationError("sample count must be positive");
  const FeatureSchema schema = FeatureSchema::survey();
  for (const auto& f : schema.features()) {
    if (f.kind == FeatureKind::kNumeric) {
      const auto it = numeric.find(f.name);
      if (it == numeric.end()) {
        throw GenerationError("no marginal for numeric feature '" + f.name + "'");
      }
      const auto& m = it->second;
      if (!(m.mean > f.min && m.mean < f.max)) {
        throw GenerationError("marginal mean of '" + f.name +
                              "' must lie strictly inside its range");
      }
      if (!(m.std_dev > 0.0) || !std::isfinite(m.std_dev)) {
        throw GenerationError("marginal std of '" + f.name + "' must be positive");
      }
    } else if (f.kind == FeatureKind::kBinary && !is_caste(f.name)) {
      const auto it = binary_rates.find(f.name);
      if (it == binary_rates.end()) {
        throw GenerationError("no rate for binary feature '" + f.name + "'");
      }
      check_probability(it->second, "rate of " + f.name);
    }
  }
  for (const auto& [name, m] : numeric) {
    const auto j = schema.find(name);
    if (!j || schema[*j].kind != FeatureKind::kNumeric) {
      throw GenerationError("'" + name + "' is not a numeric feature");
    }
  }
  for (const auto& [name, r] : binary_rates) {
    const auto j = schema.find(name);
    if (!j || schema[*j].kind != FeatureKind::kBinary || is_caste(name)) {
      throw GenerationError("'" + name + "' is not a non-caste binary feature");
    }
  }
  double caste_total = 0;
  for (const double p : caste_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw GenerationError("caste probabilities must be non-negative");
    }
    caste_total += p;
  }
  if (!(caste_total > 0.0)) throw GenerationError("caste probabilities sum to zero");
  for (const auto& [name, probs] : categorical_probs) {
    const auto j = schema.find(name);
    if (!j || schema[*j].kind != FeatureKind::kCategorical) {
      throw GenerationError("'" + name + "' is not a categorical feature");
    }
    if (probs.size() != static_cast<std::size_t>(schema[*j].categories)) {
      throw GenerationError("'" + name + "' needs " +
                            std::to_string(schema[*j].categories) + " probabilities");
    }
    double total = 0;
    for (const double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw GenerationError("probabilities of '" + name + "' must be non-negative");
      }
      total += p;
    }
    if (!(total > 0.0)) throw GenerationError("probabilities of '" + name + "' sum to zero");
  }
  validate_model(work, schema, "work");
  validate_model(white, schema, "white");
  if (!(weights.sigma >= 0.0) || !std::isfinite(weights.sigma)) {
    throw GenerationError("weight sigma must be non-negative");
  }
}

nlohmann::json GeneratorSpec::to_json() const {
  json j;
  j["n"] = n;
  j["seed"] = seed;
  json num = json::object();
  for (const auto& [name, m] : numeric) num[name] = {{"mean", m.mean}, {"std", m.std_dev}};
  j["numeric"] = num;
  j["binary_rates"] = binary_rates;
  j["caste_probs"] = caste_probs;
  j["categorical_probs"] = categorical_probs;
  j["work"] = model_to_json(work);
  j["white"] = model_to_json(white);
  j["weights"] = {
      {"kind", weights.kind == WeightModel::Kind::kConstant ? "constant" : "lognormal"},
      {"sigma", weights.sigma}};
  return j;
}

GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw GenerationError("generator spec must be a JSON object");
  static const std::set<std::string> keys = {
      "n",           "seed", "numeric", "binary_rates", "caste_probs",
      "categorical_probs", "work", "white", "weights"};
  for (const auto& [k, v] : doc.items()) {
    if (!keys.count(k)) throw GenerationError("unknown generator key '" + k + "'");
  }
  GeneratorSpec s = defaults();
  try {
    if (doc.contains("n")) s.n = doc["n"].get<std::size_t>();
    if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("numeric")) {
      for (const auto& [name, m] : doc["numeric"].items()) {
        auto& target = s.numeric[name];
        if (m.contains("mean")) target.mean = m["mean"].get<double>();
        if (m.contains("std")) target.std_dev = m["std"].get<double>();
      }
    }
    if (doc.contains("binary_rates")) {
      for (const auto& [name, r] : doc["binary_rates"].items()) {
        s.binary_rates[name] = r.get<double>();
      }
    }
    if (doc.contains("caste_probs")) {
      s.caste_probs = doc["caste_probs"].get<std::array<double, 4>>();
    }
    if (doc.contains("categorical_probs")) {
      s.categorical_probs =
          doc["categorical_probs"].get<std::map<std::string, std::vector<double>>>();
    }
    if (doc.contains("work")) model_from_json(doc["work"], s.work, "work");
    if (doc.contains("white")) model_from_json(doc["white"], s.white, "white");
    if (doc.contains("weights")) {
      const auto& w = doc["weights"];
      if (w.contains("kind")) {
        const auto kind = w["kind"].get<std::string>();
        if (kind == "constant") {
          s.weights.kind = WeightModel::Kind::kConstant;
        } else if (kind == "lognormal") {
          s.weights.kind = WeightModel::Kind::kLogNormal;
        } else {
          throw GenerationError("unknown weight model '" + kind + "'");
        }
      }
      if (w.contains("sigma")) s.weights.sigma = w["sigma"].get<double>();
    }
  } catch (const json::exception& e) {
    throw GenerationError(std::string("malformed generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

GeneratorSpec load_generator_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GenerationError("cannot open generator spec '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw GenerationError("cannot parse '" + path + "': " + e.what());
  }
  return GeneratorSpec::from_json(doc);
}

std::vector<double> discretized_normal(int lo, int hi, double mean,
                                       double std_dev) {
  if (hi <= lo) throw GenerationError("discretized normal needs lo < hi");
  if (!(mean > lo && mean < hi)) {
    throw GenerationError("discretized normal mean must lie strictly inside the range");
  }
  if (!(std_dev > 0.0)) throw GenerationError("discretized normal std must be positive");
  const double width = hi - lo;
  // Location giving the exact mean for a given scale.
  auto locate = [&](double sigma) {
    double a = lo - 100.0 * sigma;
    double b = hi + 100.0 * sigma;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      (moments(gaussian_weights(lo, hi, mid, sigma), lo).mean < mean ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };
  // The std grows with sigma once the mean is pinned, so bisect on log sigma.
  // When the target is out of reach sigma ends at a bound and only the mean is
  // enforced.
  auto spread = [&](double sigma) {
    return moments(gaussian_weights(lo, hi, locate(sigma), sigma), lo).std_dev;
  };
  double a = std::log(0.05);
  double b = std::log(10.0 * width);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (a + b);
    (spread(std::exp(mid)) < std_dev ? a : b) = mid;
  }
  const double sigma = std::exp(0.5 * (a + b));
  return gaussian_weights(lo, hi, locate(sigma), sigma);
}

double logit_predictor(const GeneratorSpec& spec, const LogitModel& model,
                       std::span<const double> row) {
  return model.intercept + compile(spec, model).offset(row);
}

Dataset generate(const GeneratorSpec& spec) {
  spec.validate();
  const FeatureSchema schema = FeatureSchema::survey();
  const std::size_t m = schema.size();

  // Per-feature samplers.
  std::vector<std::vector<double>> cumulative(m);
  std::vector<double> offset(m, 0.0);
  std::vector<double> rate(m, -1.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& f = schema[j];
    if (f.kind == FeatureKind::kNumeric) {
      const auto& marginal = spec.numeric.at(f.name);
      cumulative[j] = cumulative_of(discretized_normal(
          static_cast<int>(f.min), static_cast<int>(f.max), marginal.mean,
          marginal.std_dev));
      offset[j] = f.min;
    } else if (f.kind == FeatureKind::kCategorical) {
      const auto it = spec.categorical_probs.find(f.name);
      cumulative[j] = cumulative_of(
          it != spec.categorical_probs.end()
              ? it->second
              : std::vector<double>(static_cast<std::size_t>(f.categories), 1.0));
    } else if (!is_caste(f.name)) {
      rate[j] = spec.binary_rates.at(f.name);
    }
  }
  std::array<std::size_t, 4> caste_index{};
  for (std::size_t c = 0; c < 4; ++c) caste_index[c] = schema.index_of(kCasteFeatures[c]);
  const auto caste_cumulative =
      cumulative_of(std::vector<double>(spec.caste_probs.begin(), spec.caste_probs.end()));

  Rng feature_rng(derive_seed(spec.seed, "features"));
  std::vector<std::vector<double>> rows(spec.n, std::vector<double>(m, 0.0));
  for (auto& row : rows) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!cumulative[j].empty()) {
        row[j] = offset[j] + static_cast<double>(draw_index(cumulative[j], feature_rng.uniform()));
      } else if (rate[j] >= 0.0) {
        row[j] = feature_rng.uniform() < rate[j] ? 1.0 : 0.0;
      }
    }
    row[caste_index[draw_index(caste_cumulative, feature_rng.uniform())]] = 1.0;
  }

  const CompiledModel work = compile(spec, spec.work);
  const CompiledModel white = compile(spec, spec.white);
  std::vector<double> work_eta(spec.n), white_eta(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    work_eta[i] = work.offset(rows[i]);
    white_eta[i] = white.offset(rows[i]);
  }
  const double n = static_cast<double>(spec.n);
  double b_work = spec.work.intercept;
  if (spec.work.target_balance) {
    b_work = calibrate_intercept(
        [&](double b) {
          double s = 0;
          for (const double e : work_eta) s += sigmoid(b + e);
          return s / n;
        },
        *spec.work.target_balance, "work");
  }
  double b_white = spec.white.intercept;
  if (spec.white.target_balance) {
    b_white = calibrate_intercept(
        [&](double b) {
          double s = 0;
          for (std::size_t i = 0; i < spec.n; ++i) {
            s += sigmoid(b_work + work_eta[i]) * sigmoid(b + white_eta[i]);
          }
          return s / n;
        },
        *spec.white.target_balance, "white");
  }

  Rng label_rng(derive_seed(spec.seed, "labels"));
  Rng weight_rng(derive_seed(spec.seed, "weights"));
  std::vector<Sample> samples;
  samples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Sample s;
    s.id = i;
    s.features = std::move(rows[i]);
    const bool working = label_rng.uniform() < sigmoid(b_work + work_eta[i]);
    const bool is_white = label_rng.uniform() < sigmoid(b_white + white_eta[i]);
    s.occupation = !working ? Occupation::kUnemployed
                   : is_white ? Occupation::kWhite
                              : Occupation::kBlue;
    if (spec.weights.kind == WeightModel::Kind::kLogNormal) {
      const double sigma = spec.weights.sigma;
      s.weight = std::exp(sigma * weight_rng.normal() - 0.5 * sigma * sigma);
    }
    samples.push_back(std::move(s));
  }
  return Dataset(schema, std::move(samples), Provenance::kSynthetic);
}

PlantedEffect ground_truth_effect(const GeneratorSpec& spec, Experiment e,
                                  std::string_view feature, double value,
                                  double cohort_age) {
  if (e == Experiment::kBlue) {
    throw GenerationError("blue-collar labels have no planted model of their own");
  }
  const LogitModel& model = e == Experiment::kWork ? spec.work : spec.white;
  const FeatureSchema schema = FeatureSchema::survey();
  const std::size_t j = schema.index_of(feature);
  const auto& f = schema[j];
  PlantedEffect out;
  if (f.kind == FeatureKind::kCategorical) {
    const auto it = model.categorical.find(f.name);
    if (it != model.categorical.end()) {
      const auto code = static_cast<std::size_t>(value);
      if (value < 0 || code >= it->second.size()) {
        throw GenerationError("code out of range for '" + f.name + "'");
      }
      out.main = it->second[code];
    }
  } else {
    const auto it = model.linear.find(f.name);
    const double beta = it == model.linear.end() ? 0.0 : it->second;
    if (f.kind == FeatureKind::kNumeric) {
      const auto& marginal = spec.numeric.at(f.name);
      out.main = beta * (value - marginal.mean) / marginal.std_dev;
    } else {
      out.main = beta * value;
    }
  }
  if (f.name == "caste_scst") {
    out.interaction = model.caste_age * value * (cohort_age - 35.0) / 14.0;
  }
  return out;
}

}  // namespace surveyshap
