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

// Command line front end. Flags override the matching config keys.
//
//   surveyshap run --config run.json [--seed 7] [--threads 4]
//   surveyshap train --config run.json --experiment work

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "surveyshap/pipeline.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace surveyshap;

struct Flags {
  std::string config;
  std::string experiment;
  std::string input;
  std::string generator;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string scope;
  std::optional<std::size_t> subsample;
  std::optional<std::size_t> threads;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw PipelineError("cannot parse '" + path + "': " + e.what());
  }
}

RunConfig resolve(const Flags& f) {
  json doc = f.config.empty() ? json::object() : read_json_file(f.config);
  const std::string base =
      f.config.empty() ? fs::current_path().string()
                       : fs::absolute(f.config).parent_path().string();
  if (!f.input.empty()) doc["input"] = {{"csv", fs::absolute(f.input).string()}};
  if (!f.generator.empty()) doc["input"] = {{"generator", read_json_file(f.generator)}};
  if (!f.out.empty()) doc["output_dir"] = fs::absolute(f.out).string();
  // Without an input the default generator is used.
  if (!doc.contains("input")) doc["input"] = {{"generator", json::object()}};
  if (f.seed) doc["seed"] = *f.seed;
  if (!f.scope.empty()) doc["attribution_scope"] = f.scope == "test" ? "test_only" : f.scope;
  if (f.subsample) doc["interaction_subsample"] = *f.subsample;
  if (f.threads) doc["threads"] = *f.threads;
  if (!f.experiment.empty()) doc["experiments"] = json::array({f.experiment});
  if (!doc.contains("seed")) {
    throw PipelineError("a seed is required: pass --seed or set \"seed\" in the config");
  }
  RunConfig c = RunConfig::from_json(doc, base);
  c.validate();
  if (c.threads > 0) set_thread_count(c.threads);
  return c;
}

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)");
  cmd->add_option("--experiment", f.experiment, "work, blue or white");
  cmd->add_option("--input", f.input, "Input survey CSV");
  cmd->add_option("--generator", f.generator, "Generator spec (JSON) used as input");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--scope", f.scope, "Attribution scope")
      ->check(CLI::IsMember({"full", "test", "test_only"}));
  cmd->add_option("--subsample", f.subsample, "Interaction subsample size");
  cmd->add_option("--threads", f.threads, "Worker threads");
}

void print(const Artifacts& a, const RunConfig& c) {
  for (const auto& f : a) std::cout << (fs::path(c.output_dir) / f).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-ensemble attribution pipeline for survey data"};
  app.require_subcommand(1);
  Flags flags;

  using StageFn = Artifacts (*)(const RunConfig&, Experiment);
  struct PerExperiment {
    const char* name;
    const char* help;
    StageFn fn;
  };
  const PerExperiment stages[] = {
      {"split", "Stratified train/test split", stage_split},
      {"tune", "Cross-validated grid search", stage_tune},
      {"train", "Fit the final model and evaluate it", stage_train},
      {"explain", "Per-sample attributions", stage_explain},
      {"interactions", "Pairwise interaction attributions on a subsample", stage_interactions},
      {"analyze", "Tables and charts from the attributions", stage_analyze},
  };

  auto* run_cmd = app.add_subcommand("run", "Run every stage");
  add_flags(run_cmd, flags);
  run_cmd->callback([&] {
    const RunConfig c = resolve(flags);
    run(c);
    std::cout << (fs::path(c.output_dir) / "manifest.json").string() << '\n';
  });

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic survey CSV");
  add_flags(synth_cmd, flags);
  synth_cmd->callback([&] {
    const RunConfig c = resolve(flags);
    print(stage_synth(c), c);
  });

  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_flags(cmd, flags);
    const StageFn fn = s.fn;
    cmd->callback([&flags, fn] {
      const RunConfig c = resolve(flags);
      for (const auto e : c.experiments) print(fn(c, e), c);
    });
  }

  auto* report_cmd = app.add_subcommand("report", "Markdown report with embedded charts");
  add_flags(report_cmd, flags);
  report_cmd->callback([&] {
    const RunConfig c = resolve(flags);
    print(stage_report(c), c);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
