/*
 * Copyright 2026 The CCE Authors.
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

// Scenario-suite evaluation. For each scenario, every OOD mistake of the
// confounded model is explained by each method and the rank of the
// confounded concept is recorded. Summaries are pure functions of those
// ranks, so a persisted report can be re-summarized exactly.

#ifndef CCE_HARNESS_H_
#define CCE_HARNESS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cce/explainer.h"
#include "cce/io.h"
#include "cce/scenarios.h"

namespace cce {

enum class Method { kCce, kCceUnivariate, kCss, kRandom, kControl };

const char* MethodName(Method method);
std::optional<Method> ParseMethod(const std::string& name);
std::vector<Method> AllMethods();

struct SuiteConfig {
  std::vector<Method> methods = AllMethods();
  OptimConfig optim;
  std::uint64_t seed = 0;  // random-baseline stream
  int threads = 1;
};

// `count` scenarios derived from `seed`; each gets its own world seed and a
// seeded choice of confounded class and concept.
std::vector<ScenarioSpec> DefaultSuite(int count, std::uint64_t seed,
                                       double severity = 1.0,
                                       const ScenarioSpec& base = {});

struct ScenarioOutcome {
  ScenarioSpec spec;
  std::string target;
  double train_accuracy = 0.0;
  int bank_size = 0;
  int n_mistakes = 0;
  std::string skip_reason;  // non-empty when excluded from aggregates
  std::map<std::string, std::vector<int>> ranks;  // method -> target ranks
};

struct SuiteRun {
  SuiteConfig config;
  std::vector<ScenarioOutcome> scenarios;
};

SuiteRun RunSuite(const std::vector<ScenarioSpec>& specs,
                  const SuiteConfig& config);

constexpr int kMaxK = 10;

struct MethodStats {
  std::array<double, kMaxK> precision_at_k{};  // K = 1..10
  double median_rank = 0.0;
  double q1_rank = 0.0;
  double q3_rank = 0.0;
};

struct MethodAggregate {
  std::array<double, kMaxK> mean_precision_at_k{};
  double mean_median_rank = 0.0;
  double mean_q1_rank = 0.0;
  double mean_q3_rank = 0.0;
  int n_scenarios = 0;
};

struct ScenarioSummary {
  std::uint64_t seed = 0;
  std::string target;
  int n_mistakes = 0;
  bool excluded = false;
  std::map<std::string, MethodStats> methods;
};

struct EvalSummary {
  std::vector<ScenarioSummary> scenarios;
  std::map<std::string, MethodAggregate> aggregate;
  std::vector<std::string> warnings;
};

MethodStats ComputeMethodStats(const std::vector<int>& ranks);
EvalSummary Summarize(const SuiteRun& run);

Json SummaryToJson(const EvalSummary& summary);
// Full report: config, per-scenario ranks, and the summary. Contains no
// timing, so equal inputs give byte-identical output.
Json SuiteReportToJson(const SuiteRun& run, const EvalSummary& summary);
SuiteRun SuiteRunFromJson(const Json& report);

}  // namespace cce

#endif  // CCE_HARNESS_H_
