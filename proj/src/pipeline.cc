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

#include "surveyshap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "surveyshap/analysis.h"
#include "surveyshap/svg.h"
#include "surveyshap/treeshap.h"

namespace surveyshap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string exp_name(Experiment e) { return std::string(experiment_name(e)); }

fs::path out_path(const RunConfig& c, const std::string& rel) {
  return fs::path(c.output_dir) / rel;
}

// Throws PipelineError naming the file and the stage that produces it.
fs::path require(const RunConfig& c, const std::string& rel,
                 const std::string& producer) {
  const fs::path p = out_path(c, rel);
  if (!fs::exists(p)) {
    throw PipelineError("missing artifact '" + p.string() + "'; run the '" +
                        producer + "' stage first");
  }
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw PipelineError("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw PipelineError("cannot parse '" + path.string() + "': " + e.what());
  }
}

template <typename Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

std::string split_file(Experiment e, const char* part) {
  return "splits/" + exp_name(e) + "_" + part + ".csv";
}

Dataset load_split(const RunConfig& c, Experiment e, const char* part) {
  const auto p = require(c, split_file(e, part), "split");
  return load_csv(p.string(), FeatureSchema::survey());
}

TreeEnsemble load_trained(const RunConfig& c, Experiment e) {
  const auto p = require(c, "model_" + exp_name(e) + ".json", "train");
  return load_model(p.string());
}

Hyperparams load_tuned(const RunConfig& c, Experiment e) {
  const auto p = require(c, "tune_" + exp_name(e) + ".json", "tune");
  return Hyperparams::from_json(read_json(p).at("best"));
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"f1", m.f1},
          {"class_balance", m.class_balance},
          {"true_positive", m.true_positive},
          {"false_positive", m.false_positive},
          {"false_negative", m.false_negative},
          {"true_negative", m.true_negative}};
}

// Rows of `ds` with the given ids, in id-list order.
Dataset align_by_ids(const Dataset& ds, const std::vector<std::uint64_t>& ids) {
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) index.emplace(ds[i].id, i);
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw PipelineError("sample " + std::to_string(id) +
                          " of a stored attribution is absent from the data");
    }
    rows.push_back(it->second);
  }
  return ds.subset(rows);
}

std::string scope_name(AttributionScope s) {
  return s == AttributionScope::kFull ? "full" : "test_only";
}

AttributionScope parse_scope(const std::string& s) {
  if (s == "full") return AttributionScope::kFull;
  if (s == "test_only" || s == "test") return AttributionScope::kTestOnly;
  throw PipelineError("unknown attribution scope '" + s + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (input_csv.has_value() == generator.has_value()) {
    throw PipelineError("config needs exactly one input: a csv path or a generator");
  }
  if (experiments.empty()) throw PipelineError("config needs at least one experiment");
  std::set<Experiment> seen(experiments.begin(), experiments.end());
  if (seen.size() != experiments.size()) {
    throw PipelineError("experiments must not repeat");
  }
  if (grid.empty()) throw PipelineError("hyperparameter grid is empty");
  if (interaction_subsample == 0) {
    throw PipelineError("interaction_subsample must be positive");
  }
  if (output_dir.empty()) throw PipelineError("output_dir is required");
  try {
    split.validate();
    for (const auto& hp : grid) hp.validate();
    if (generator) generator->validate();
  } catch (const Error& e) {
    throw PipelineError(std::string("invalid config: ") + e.what());
  }
  if (bootstrap) {
    if (bootstrap->count < 2) throw PipelineError("bootstrap count must be at least 2");
    if (!(bootstrap->fraction > 0 && bootstrap->fraction <= 1)) {
      throw PipelineError("bootstrap fraction must lie in (0, 1]");
    }
  }
  if (!(targets.confidence > 0 && targets.confidence < 1)) {
    throw PipelineError("analysis confidence must lie in (0, 1)");
  }
  const auto schema = FeatureSchema::survey();
  for (const auto* name : {&targets.feature, &targets.cohort_feature,
                           &targets.group_feature}) {
    if (!schema.find(*name)) {
      throw PipelineError("analysis target '" + *name + "' is not a feature");
    }
  }
}

nlohmann::json RunConfig::to_json() const {
  json j;
  if (input_csv) j["input"] = {{"csv", *input_csv}};
  if (generator) j["input"] = {{"generator", generator->to_json()}};
  j["experiments"] = json::array();
  for (const auto e : experiments) j["experiments"].push_back(exp_name(e));
  j["split"] = {{"test_fraction", split.test_fraction},
                {"folds", split.folds},
                {"weighted", split.weighted}};
  j["grid"] = json::array();
  for (const auto& hp : grid) j["grid"].push_back(hp.to_json());
  j["interaction_subsample"] = interaction_subsample;
  j["attribution_scope"] = scope_name(attribution_scope);
  if (bootstrap) {
    j["bootstrap"] = {{"count", bootstrap->count}, {"fraction", bootstrap->fraction}};
  }
  j["analysis"] = {{"feature", targets.feature},
                   {"cohort_feature", targets.cohort_feature},
                   {"group_feature", targets.group_feature},
                   {"confidence", targets.confidence}};
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw PipelineError("config must be a JSON object");
  static const std::set<std::string> keys = {
      "input", "experiments", "split", "grid", "interaction_subsample",
      "attribution_scope", "bootstrap", "analysis", "output_dir", "seed", "threads"};
  for (const auto& [k, v] : doc.items()) {
    if (!keys.count(k)) throw PipelineError("unknown config key '" + k + "'");
  }
  RunConfig c;
  try {
    c.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("input")) {
      const auto& in = doc["input"];
      if (in.contains("csv")) {
        fs::path p = in["csv"].get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        c.input_csv = p.lexically_normal().string();
      }
      if (in.contains("generator")) {
        json g = in["generator"];
        if (!g.contains("seed")) g["seed"] = c.seed;
        c.generator = GeneratorSpec::from_json(g);
      }
    }
    if (doc.contains("experiments")) {
      for (const auto& e : doc["experiments"]) {
        c.experiments.push_back(parse_experiment(e.get<std::string>()));
      }
    } else {
      c.experiments = {Experiment::kWork, Experiment::kBlue, Experiment::kWhite};
    }
    if (doc.contains("split")) {
      const auto& s = doc["split"];
      c.split.test_fraction = s.value("test_fraction", c.split.test_fraction);
      c.split.folds = s.value("folds", c.split.folds);
      c.split.weighted = s.value("weighted", c.split.weighted);
    }
    if (doc.contains("grid")) {
      for (const auto& hp : doc["grid"]) c.grid.push_back(Hyperparams::from_json(hp));
    } else {
      c.grid = default_grid();
    }
    c.interaction_subsample =
        doc.value("interaction_subsample", c.interaction_subsample);
    if (doc.contains("attribution_scope")) {
      c.attribution_scope = parse_scope(doc["attribution_scope"].get<std::string>());
    }
    if (doc.contains("bootstrap") && !doc["bootstrap"].is_null()) {
      BootstrapSpec b;
      b.count = doc["bootstrap"].value("count", b.count);
      b.fraction = doc["bootstrap"].value("fraction", b.fraction);
      c.bootstrap = b;
    }
    if (doc.contains("analysis")) {
      const auto& a = doc["analysis"];
      c.targets.feature = a.value("feature", c.targets.feature);
      c.targets.cohort_feature = a.value("cohort_feature", c.targets.cohort_feature);
      c.targets.group_feature = a.value("group_feature", c.targets.group_feature);
      c.targets.confidence = a.value("confidence", c.targets.confidence);
    }
    if (doc.contains("output_dir")) {
      fs::path p = doc["output_dir"].get<std::string>();
      if (p.is_relative()) p = fs::path(base_dir) / p;
      c.output_dir = p.lexically_normal().string();
    }
    c.threads = doc.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw PipelineError(std::string("malformed config: ") + e.what());
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw PipelineError("cannot parse config '" + path + "': " + e.what());
  }
  return RunConfig::from_json(doc, fs::path(path).parent_path().string());
}

Dataset load_input(const RunConfig& config) {
  if (config.input_csv) return load_csv(*config.input_csv, FeatureSchema::survey());
  const auto p = require(config, "data.csv", "synth");
  return load_csv(p.string(), FeatureSchema::survey());
}

Dataset attribution_dataset(const RunConfig& config, Experiment e) {
  if (config.attribution_scope == AttributionScope::kTestOnly) {
    return load_split(config, e, "test");
  }
  return load_input(config);
}

Artifacts stage_synth(const RunConfig& config) {
  if (!config.generator) {
    throw PipelineError("the synth stage needs a generator input");
  }
  const Dataset ds = generate(*config.generator);
  write_file(out_path(config, "data.csv"), render([&](std::ostream& o) { write_csv(ds, o); }));
  return {"data.csv"};
}

Artifacts stage_split(const RunConfig& config, Experiment e) {
  const Dataset ds = load_input(config);
  SplitSpec spec = config.split;
  spec.seed = derive_seed(config.seed, "split/" + exp_name(e));
  const auto split = stratified_split(ds, e, spec);
  const auto train_rel = split_file(e, "train");
  const auto test_rel = split_file(e, "test");
  write_file(out_path(config, train_rel),
             render([&](std::ostream& o) { write_csv(split.train, o); }));
  write_file(out_path(config, test_rel),
             render([&](std::ostream& o) { write_csv(split.test, o); }));
  return {train_rel, test_rel};
}

Artifacts stage_tune(const RunConfig& config, Experiment e) {
  const Dataset train_set = load_split(config, e, "train");
  SplitSpec spec = config.split;
  spec.seed = derive_seed(config.seed, "tune/" + exp_name(e));
  const auto result = grid_search(train_set, e, config.grid, spec);

  const std::string table_rel = "tables/" + exp_name(e) + "_cv.csv";
  write_file(out_path(config, table_rel), render([&](std::ostream& o) {
               o << "grid_index,num_trees,learning_rate,max_leaves,min_samples_leaf,"
                    "l2_lambda,max_bins,mean_f1,fold_f1,error\n";
               for (std::size_t i = 0; i < result.cv_table.size(); ++i) {
                 const auto& row = result.cv_table[i];
                 const auto& hp = row.hyperparams;
                 o << i << ',' << hp.num_trees << ',' << format_double(hp.learning_rate)
                   << ',' << hp.max_leaves << ',' << hp.min_samples_leaf << ','
                   << format_double(hp.l2_lambda) << ',' << hp.max_bins << ','
                   << (row.ok() ? format_double(row.mean_f1) : "") << ',';
                 for (std::size_t f = 0; f < row.fold_f1.size(); ++f) {
                   o << (f ? " " : "") << format_double(row.fold_f1[f]);
                 }
                 std::string err = row.error;
                 std::replace(err.begin(), err.end(), ',', ';');
                 std::replace(err.begin(), err.end(), '\n', ' ');
                 o << ',' << err << '\n';
               }
             }));
  const std::string tune_rel = "tune_" + exp_name(e) + ".json";
  write_file(out_path(config, tune_rel),
             json{{"experiment", exp_name(e)},
                  {"best", result.best.to_json()},
                  {"best_index", result.best_index},
                  {"mean_f1", result.cv_table[result.best_index].mean_f1}}
                     .dump(2) + "\n");
  return {table_rel, tune_rel};
}

Artifacts stage_train(const RunConfig& config, Experiment e) {
  const Hyperparams hp = load_tuned(config, e);
  const Dataset train_set = load_split(config, e, "train");
  const Dataset test_set = load_split(config, e, "test");
  const TreeEnsemble model =
      train(train_set, e, hp, derive_seed(config.seed, "train/" + exp_name(e)));
  const std::string model_rel = "model_" + exp_name(e) + ".json";
  save_model(model, out_path(config, model_rel).string());
  const std::string metrics_rel = "metrics_" + exp_name(e) + ".json";
  write_file(out_path(config, metrics_rel),
             json{{"experiment", exp_name(e)},
                  {"hyperparams", hp.to_json()},
                  {"train", metrics_json(evaluate(model, train_set, e))},
                  {"test", metrics_json(evaluate(model, test_set, e))}}
                     .dump(2) + "\n");
  return {model_rel, metrics_rel};
}

Artifacts stage_explain(const RunConfig& config, Experiment e) {
  const TreeEnsemble model = load_trained(config, e);
  const Dataset ds = attribution_dataset(config, e);
  const ShapMatrix m = shap_values(model, ds);
  const double err = max_local_accuracy_error(model, ds, m);
  if (!(err <= 1e-6)) {
    throw AttributionError("local accuracy check failed: relative error " +
                           format_double(err));
  }
  const std::string prefix = "shap/" + exp_name(e) + "_shap";
  fs::create_directories(out_path(config, "shap"));
  save_shap_binary(m, out_path(config, prefix).string());
  const std::string info_rel = "shap/" + exp_name(e) + "_explain.json";
  write_file(out_path(config, info_rel),
             json{{"experiment", exp_name(e)},
                  {"scope", scope_name(config.attribution_scope)},
                  {"samples", m.num_samples},
                  {"base_value", m.base_value},
                  {"max_local_accuracy_error", err}}
                     .dump(2) + "\n");
  return {prefix + ".bin", prefix + ".json", info_rel};
}

Artifacts stage_interactions(const RunConfig& config, Experiment e) {
  const TreeEnsemble model = load_trained(config, e);
  const Dataset ds = attribution_dataset(config, e);
  const std::size_t k = std::min(config.interaction_subsample, ds.size());
  const Dataset sub = weighted_subsample(
      ds, k, derive_seed(config.seed, "interactions/" + exp_name(e)));
  const InteractionTensor t = interaction_values(model, sub);
  const std::string prefix = "shap/" + exp_name(e) + "_interactions";
  fs::create_directories(out_path(config, "shap"));
  save_interactions_binary(t, out_path(config, prefix).string());
  return {prefix + ".bin", prefix + ".json"};
}

Artifacts stage_analyze(const RunConfig& config, Experiment e) {
  const std::string name = exp_name(e);
  const Dataset ds = attribution_dataset(config, e);
  require(config, "shap/" + name + "_shap.bin", "explain");
  const ShapMatrix m = load_shap_binary(out_path(config, "shap/" + name + "_shap").string());
  require(config, "shap/" + name + "_interactions.bin", "interactions");
  const InteractionTensor t =
      load_interactions_binary(out_path(config, "shap/" + name + "_interactions").string());
  const Dataset sub = align_by_ids(ds, t.sample_ids);

  const auto& schema = ds.schema();
  const std::size_t feature = schema.index_of(config.targets.feature);
  const std::size_t cohort = schema.index_of(config.targets.cohort_feature);
  const std::size_t group = schema.index_of(config.targets.group_feature);
  const std::string& fname = config.targets.feature;
  const std::string& cname = config.targets.cohort_feature;

  Artifacts out;
  auto table = [&](const std::string& stem, const std::string& text) {
    const std::string rel = "tables/" + name + "_" + stem + ".csv";
    write_file(out_path(config, rel), text);
    out.push_back(rel);
  };
  auto chart = [&](const std::string& stem, const std::string& text) {
    const std::string rel = "charts/" + name + "_" + stem + ".svg";
    write_file(out_path(config, rel), text);
    out.push_back(rel);
  };

  const auto ranking = global_importance(m);
  table("importance", render([&](std::ostream& o) { write_importance_csv(ranking, o); }));
  {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& r : ranking) {
      labels.push_back(r.name);
      values.push_back(r.mean_abs);
    }
    chart("importance", svg_bar(labels, values, name + ": mean |SHAP| per feature"));
  }

  const auto curve = cohort_curve(m, ds, feature, cohort, config.targets.confidence);
  table("cohort_curve", render([&](std::ostream& o) { write_cohort_csv(curve, o); }));
  chart("cohort_curve",
        svg_cohort(curve, name + ": mean |SHAP| of " + fname + " by " + cname));

  const auto dep = dependence_extract(m, ds, feature, cohort);
  table("dependence", render([&](std::ostream& o) { write_dependence_csv(dep, o); }));
  chart("dependence", svg_scatter(dep, name + ": SHAP of " + fname + " coloured by " + cname));

  const ShapMatrix main = main_effects(t);
  const auto main_dep = dependence_extract(main, sub, feature, cohort);
  table("main_effect", render([&](std::ostream& o) { write_dependence_csv(main_dep, o); }));
  chart("main_effect", svg_scatter(main_dep, name + ": main effect of " + fname));

  const auto by_cohort = interaction_pair_extract(t, sub, feature, cohort, PairAxis::kB);
  table("interaction_" + cname,
        render([&](std::ostream& o) { write_dependence_csv(by_cohort, o); }));
  chart("interaction_" + cname,
        svg_scatter(by_cohort, name + ": interaction of " + cname + " and " + fname));
  const auto by_feature = interaction_pair_extract(t, sub, feature, cohort, PairAxis::kA);
  table("interaction_" + fname,
        render([&](std::ostream& o) { write_dependence_csv(by_feature, o); }));

  const auto heat = interaction_heatmap(t);
  table("heatmap", render([&](std::ostream& o) { write_heatmap_csv(heat, o); }));
  chart("heatmap", svg_heatmap(heat, name + ": mean |SHAP interaction|"));

  const auto groups = group_mean_importance(m, ds, feature, group);
  table(config.targets.group_feature + "_importance", render([&](std::ostream& o) {
          write_group_csv(groups, config.targets.group_feature, o);
        }));
  {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& g : groups) {
      labels.push_back(config.targets.group_feature + " " + std::to_string(g.group));
      values.push_back(g.mean_abs);
    }
    chart(config.targets.group_feature + "_importance",
          svg_bar(labels, values, name + ": mean |SHAP| of " + fname + " per " +
                                      config.targets.group_feature));
  }

  if (config.bootstrap) {
    const Hyperparams hp = load_tuned(config, e);
    const Dataset full = load_input(config);
    const auto subsets = bootstrap_subsets(full, config.bootstrap->count,
                                           config.bootstrap->fraction,
                                           derive_seed(config.seed, "bootstrap/" + name));
    std::vector<CohortCurve> curves;
    for (const auto& s : subsets) {
      const TreeEnsemble model = train(s, e, hp);
      // Explain the rows the replica never saw, falling back to every row.
      std::set<std::uint64_t> used;
      for (const auto& sample : s.samples()) used.insert(sample.id);
      std::vector<std::size_t> held;
      for (std::size_t i = 0; i < full.size(); ++i) {
        if (!used.count(full[i].id)) held.push_back(i);
      }
      const Dataset target = held.empty() ? full : full.subset(held);
      curves.push_back(cohort_curve(shap_values(model, target), target, feature, cohort,
                                    config.targets.confidence));
    }
    table("bootstrap_curves", render([&](std::ostream& o) {
            o << "replica," << cname << ",mean_abs_shap,ci_low,ci_high,n\n";
            for (std::size_t r = 0; r < curves.size(); ++r) {
              for (const auto& p : curves[r].points) {
                o << r << ',' << format_double(p.cohort) << ','
                  << format_double(p.mean_abs) << ',' << format_double(p.ci_low) << ','
                  << format_double(p.ci_high) << ',' << p.n << '\n';
              }
            }
          }));
    const auto comparison = robustness_compare(curves);
    table("robustness", render([&](std::ostream& o) { write_comparison_csv(comparison, o); }));
  }

  // Dataset-level tables; identical for every experiment.
  const Dataset full = load_input(config);
  write_file(out_path(config, "tables/spearman.csv"),
             render([&](std::ostream& o) { write_spearman_csv(spearman_matrix(full), o); }));
  write_file(out_path(config, "tables/summary_stats.csv"),
             render([&](std::ostream& o) { write_summary_csv(summary_stats(full), o); }));
  out.push_back("tables/spearman.csv");
  out.push_back("tables/summary_stats.csv");
  return out;
}

Artifacts stage_report(const RunConfig& config) {
  const Dataset full = load_input(config);
  std::vector<json> metrics;
  for (const auto e : config.experiments) {
    metrics.push_back(read_json(require(config, "metrics_" + exp_name(e) + ".json", "train")));
  }
  std::ostringstream csv;
  csv << "experiment,class_balance,train_accuracy,train_f1,test_accuracy,test_f1\n";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    csv << exp_name(config.experiments[i]) << ','
        << format_double(class_balance(full, config.experiments[i])) << ','
        << format_double(m["train"]["accuracy"].get<double>()) << ','
        << format_double(m["train"]["f1"].get<double>()) << ','
        << format_double(m["test"]["accuracy"].get<double>()) << ','
        << format_double(m["test"]["f1"].get<double>()) << '\n';
  }
  write_file(out_path(config, "tables/metrics.csv"), csv.str());

  auto fixed3 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  std::ostringstream md;
  md << "# surveyshap report\n\n"
     << "Samples: " << full.size() << ". Seed: " << config.seed
     << ". Attribution scope: " << scope_name(config.attribution_scope) << ".\n\n"
     << "## Model performance\n\n"
     << "| Experiment | Class balance | Train accuracy | Train F1 | Test accuracy | Test F1 |\n"
     << "|---|---|---|---|---|---|\n";
  json report = {{"version", kVersion}, {"seed", config.seed}, {"experiments", json::object()}};
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto e = config.experiments[i];
    const auto& m = metrics[i];
    md << "| " << exp_name(e) << " | " << fixed3(class_balance(full, e)) << " | "
       << fixed3(m["train"]["accuracy"].get<double>()) << " | "
       << fixed3(m["train"]["f1"].get<double>()) << " | "
       << fixed3(m["test"]["accuracy"].get<double>()) << " | "
       << fixed3(m["test"]["f1"].get<double>()) << " |\n";
    report["experiments"][exp_name(e)] = {{"class_balance", class_balance(full, e)},
                                          {"train", m["train"]},
                                          {"test", m["test"]},
                                          {"hyperparams", m["hyperparams"]}};
  }
  md << '\n';
  for (const auto e : config.experiments) {
    const std::string name = exp_name(e);
    md << "## " << name << "\n\n";
    for (const std::string& stem : std::vector<std::string>{
             "importance", "cohort_curve", "dependence", "main_effect",
          "interaction_" + config.targets.cohort_feature, "heatmap",
          config.targets.group_feature + "_importance"}) {
      const auto p = require(config, "charts/" + name + "_" + stem + ".svg", "analyze");
      md << "### " << stem << "\n\n" << read_file(p) << '\n';
    }
    const auto robustness = out_path(config, "tables/" + name + "_robustness.csv");
    if (fs::exists(robustness)) {
      md << "### bootstrap robustness\n\n```\n" << read_file(robustness) << "```\n\n";
    }
  }
  write_file(out_path(config, "report.md"), md.str());
  write_file(out_path(config, "report.json"), report.dump(2) + "\n");
  return {"tables/metrics.csv", "report.md", "report.json"};
}

json run(const RunConfig& config) {
  config.validate();
  if (config.threads > 0) set_thread_count(config.threads);
  fs::create_directories(config.output_dir);

  json manifest = {{"tool", "surveyshap"},
                   {"version", kVersion},
                   {"seed", config.seed},
                   {"config", config.to_json()},
                   {"status", "running"},
                   {"artifacts", json::array()},
                   {"experiments", json::object()}};
  auto write_manifest = [&] {
    write_file(out_path(config, "manifest.json"), manifest.dump(2) + "\n");
  };

  std::string stage = "synth";
  std::string current_exp;
  auto timed = [&](const std::string& name, auto&& fn) {
    stage = name;
    const auto start = std::chrono::steady_clock::now();
    Artifacts a = fn();
    const auto ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    json& target = current_exp.empty() ? manifest : manifest["experiments"][current_exp];
    for (const auto& f : a) target["artifacts"].push_back(f);
    target["timings_ms"][name] = ms;
  };

  try {
    if (config.generator) timed("synth", [&] { return stage_synth(config); });
    for (const auto e : config.experiments) {
      current_exp = exp_name(e);
      manifest["experiments"][current_exp] = {{"artifacts", json::array()}};
      timed("split", [&] { return stage_split(config, e); });
      timed("tune", [&] { return stage_tune(config, e); });
      timed("train", [&] { return stage_train(config, e); });
      const json m = read_json(out_path(config, "metrics_" + current_exp + ".json"));
      manifest["experiments"][current_exp]["hyperparams"] = m["hyperparams"];
      manifest["experiments"][current_exp]["train_metrics"] = m["train"];
      manifest["experiments"][current_exp]["test_metrics"] = m["test"];
      timed("explain", [&] { return stage_explain(config, e); });
      timed("interactions", [&] { return stage_interactions(config, e); });
      timed("analyze", [&] { return stage_analyze(config, e); });
    }
    current_exp.clear();
    timed("report", [&] { return stage_report(config); });
  } catch (const std::exception& ex) {
    manifest["status"] = "failed";
    manifest["failed_stage"] = stage;
    if (!current_exp.empty()) manifest["failed_experiment"] = current_exp;
    manifest["error"] = ex.what();
    write_manifest();
    throw PipelineError("stage '" + stage + "' failed" +
                        (current_exp.empty() ? "" : " for " + current_exp) + ": " +
                        ex.what());
  }
  manifest["status"] = "ok";
  write_manifest();
  return manifest;
}

}  // namespace surveyshap
