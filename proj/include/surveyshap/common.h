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

#ifndef SURVEYSHAP_COMMON_H_
#define SURVEYSHAP_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace surveyshap {

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers (and the CLI) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// A single input row violates a range or invariant. `row()` is the 0-based
// data row index (header excluded).
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class PredictionError : public Error {
 public:
  using Error::Error;
};

class AttributionError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class PipelineError : public Error {
 public:
  using Error::Error;
};

// The three binary prediction tasks.
enum class Experiment { kWork, kBlue, kWhite };

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);

// Deterministic 64-bit generator. Uniform draws are built from raw bits so the
// stream is identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_zero();
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::uint64_t state_[4];
};

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// Process-wide worker count for the parallel kernels. Results never depend on
// it; only wall-clock time does.
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Splits [0, n) into contiguous chunks, one per worker, and runs
// fn(begin, end) on each. Chunks are disjoint, so writers partitioned by index
// never overlap.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

double sigmoid(double margin);
double logit(double p);

}  // namespace surveyshap

#endif  // SURVEYSHAP_COMMON_H_
