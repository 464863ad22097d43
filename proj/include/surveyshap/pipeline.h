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

// End-to-end pipeline. Every stage reads its inputs from fixed file names under
// the output directory and writes its products there, so each stage can run on
// its own and `run` is nothing more than their composition.
//
// Layout of the output directory:
//   data.csv                            synthetic input (generator runs only)
//   splits/<exp>_{train,test}.csv       split
//   tune_<exp>.json, tables/<exp>_cv.csv                        tune
//   model_<exp>.json, metrics_<exp>.json                        train
//   shap/<exp>_shap.{bin,json}, shap/<exp>_explain.json         explain
//   shap/<exp>_interactions.{bin,json}                          interactions
//   tables/<exp>_*.csv, charts/<exp>_*.svg                      analyze
//   tables/metrics.csv, report.md, report.json                  report
//   manifest.json                                               run

#ifndef SURVEYSHAP_PIPELINE_H_
#define SURVEYSHAP_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "surveyshap/dataset.h"
#include "surveyshap/gbdt.h"
#include "surveyshap/synth.h"

namespace surveyshap {

inline constexpr const char* kVersion = "0.1.0";

enum class AttributionScope { kFull, kTestOnly };

struct BootstrapSpec {
  int count = 5;
  double fraction = 0.8;
};

// Which features the per-experiment analysis products track.
struct AnalysisTargets {
  std::string feature = "caste_scst";
  std::string cohort_feature = "age";
  std::string group_feature = "state";
  double confidence = 0.99;
};

struct RunConfig {
  // Exactly one of the two inputs is set.
  std::optional<std::string> input_csv;
  std::optional<GeneratorSpec> generator;
  std::vector<Experiment> experiments;
  // The split seed is derived from `seed`; the spec's own seed is ignored.
  SplitSpec split;
  std::vector<Hyperparams> grid;
  std::size_t interaction_subsample = 10000;
  AttributionScope attribution_scope = AttributionScope::kFull;
  std::optional<BootstrapSpec> bootstrap;
  AnalysisTargets targets;
  std::string output_dir;
  std::uint64_t seed = 0;
  // 0 keeps the process default.
  std::size_t threads = 0;

  // Throws PipelineError.
  void validate() const;
  nlohmann::json to_json() const;
  // Relative input paths are resolved against `base_dir`. A missing grid means
  // default_grid(); a generator without its own seed inherits `seed`.
  static RunConfig from_json(const nlohmann::json& doc,
                             const std::string& base_dir = ".");
};

RunConfig load_run_config(const std::string& path);

// Files a stage wrote, relative to the output directory.
using Artifacts = std::vector<std::string>;

// Loads the configured input: the CSV, or data.csv written by stage_synth.
Dataset load_input(const RunConfig& config);
// The rows attributions are computed for under the configured scope.
Dataset attribution_dataset(const RunConfig& config, Experiment e);

Artifacts stage_synth(const RunConfig& config);
Artifacts stage_split(const RunConfig& config, Experiment e);
Artifacts stage_tune(const RunConfig& config, Experiment e);
Artifacts stage_train(const RunConfig& config, Experiment e);
Artifacts stage_explain(const RunConfig& config, Experiment e);
Artifacts stage_interactions(const RunConfig& config, Experiment e);
Artifacts stage_analyze(const RunConfig& config, Experiment e);
Artifacts stage_report(const RunConfig& config);

// Runs every stage and writes manifest.json. On failure the manifest records
// the failed stage and its message, then PipelineError is thrown.
nlohmann::json run(const RunConfig& config);

}  // namespace surveyshap

#endif  // SURVEYSHAP_PIPELINE_H_
