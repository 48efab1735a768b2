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

#include "cce/harness.h"

#include <algorithm>
#include <cstdio>

#include "cce/errors.h"
#include "cce/metrics.h"
#include "cce/parallel.h"
#include "cce/rng.h"

namespace cce {

namespace {

enum : std::uint64_t { kTargetStream = 7 };

std::vector<int> Ranks(const std::vector<std::vector<RankedConcept>>& rankings,
                       const std::string& target) {
  std::vector<int> out;
  out.reserve(rankings.size());
  for (const auto& ranking : rankings) {
    Ranking names;
    names.reserve(ranking.size());
    for (const RankedConcept& c : ranking) names.push_back(c.name);
    out.push_back(RankOf(names, target));
  }
  return out;
}

ScenarioOutcome RunScenario(const ScenarioSpec& spec, int scenario_index,
                            const SuiteConfig& config) {
  ScenarioOutcome out;
  out.spec = spec;
  const ScenarioWorld world = GenerateWorld(spec);
  out.target = world.target_name();
  out.train_accuracy = world.train_accuracy;
  out.bank_size = world.bank.size();
  const std::vector<LabeledEmbedding> mistakes = CollectOodMistakes(world);
  out.n_mistakes = static_cast<int>(mistakes.size());
  if (mistakes.empty()) {
    out.skip_reason = "no OOD mistakes";
    return out;
  }
  const auto target_index = world.bank.IndexOf(out.target);
  if (!target_index) {
    out.skip_reason = "target concept did not reach the bank threshold";
    return out;
  }

  for (Method method : config.methods) {
    std::vector<std::vector<RankedConcept>> rankings;
    std::vector<int> ranks;
    switch (method) {
      case Method::kCce:
        for (const LabeledEmbedding& m : mistakes) {
          rankings.push_back(
              CceExplain(m.embedding, m.label, world.head, world.bank,
                         config.optim)
                  .ranking);
        }
        break;
      case Method::kCceUnivariate:
        for (const LabeledEmbedding& m : mistakes) {
          rankings.push_back(
              CceUnivariate(m.embedding, m.label, world.head, world.bank));
        }
        break;
      case Method::kCss:
        for (const LabeledEmbedding& m : mistakes) {
          rankings.push_back(
              CssRanking(m.embedding, m.label, world.head, world.bank));
        }
        break;
      case Method::kRandom: {
        Rng rng = Rng(config.seed).Derive(static_cast<std::uint64_t>(
            scenario_index));
        for (std::size_t i = 0; i < mistakes.size(); ++i) {
          const std::vector<int> perm = rng.Permutation(world.bank.size());
          const auto pos = std::find(perm.begin(), perm.end(), *target_index);
          ranks.push_back(static_cast<int>(pos - perm.begin()) + 1);
        }
        break;
      }
      case Method::kControl: {
        // Same test samples, explained against a model trained without the
        // confound. The bank depends only on the seed, so it is shared.
        ScenarioSpec control_spec = spec;
        control_spec.severity = 0.0;
        const ScenarioWorld control = GenerateWorld(control_spec, &world.bank);
        for (const LabeledEmbedding& m : mistakes) {
          rankings.push_back(CceExplain(m.embedding, m.label, control.head,
                                        control.bank, config.optim)
                                 .ranking);
        }
        break;
      }
    }
    if (ranks.empty()) ranks = Ranks(rankings, out.target);
    out.ranks[MethodName(method)] = std::move(ranks);
  }
  return out;
}

Json OptimToJson(const OptimConfig& c) {
  return {{"alpha", c.alpha},         {"beta", c.beta},
          {"step_size", c.step_size}, {"max_steps", c.max_steps},
          {"beta1", c.beta1},         {"beta2", c.beta2},
          {"epsilon", c.epsilon},     {"max_halvings", c.max_halvings},
          {"tolerance", c.tolerance}, {"seed", c.seed}};
}

OptimConfig OptimFromJson(const Json& j) {
  OptimConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.step_size = j.at("step_size").get<double>();
  c.max_steps = j.at("max_steps").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.max_halvings = j.at("max_halvings").get<int>();
  c.tolerance = j.at("tolerance").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json StatsToJson(const MethodStats& s) {
  return {{"precision_at_k", s.precision_at_k},
          {"median_rank", s.median_rank},
          {"q1_rank", s.q1_rank},
          {"q3_rank", s.q3_rank}};
}

}  // namespace

const char* MethodName(Method method) {
  switch (method) {
    case Method::kCce:
      return "cce";
    case Method::kCceUnivariate:
      return "cce_univariate";
    case Method::kCss:
      return "css";
    case Method::kRandom:
      return "random";
    case Method::kControl:
      return "control";
  }
  return "unknown";
}

std::optional<Method> ParseMethod(const std::string& name) {
  for (Method m : AllMethods()) {
    if (name == MethodName(m)) return m;
  }
  return std::nullopt;
}

std::vector<Method> AllMethods() {
  return {Method::kCce, Method::kCceUnivariate, Method::kCss, Method::kRandom,
          Method::kControl};
}

std::vector<ScenarioSpec> DefaultSuite(int count, std::uint64_t seed,
                                       double severity,
                                       const ScenarioSpec& base) {
  if (count < 1) Fail(ErrorKind::kInvalidInput, "suite needs >= 1 scenario");
  std::vector<ScenarioSpec> specs;
  const Rng root(seed);
  for (int i = 0; i < count; ++i) {
    ScenarioSpec s = base;
    s.seed = root.Derive(static_cast<std::uint64_t>(i)).NextU64();
    s.severity = severity;
    Rng pick = Rng(s.seed).Derive(kTargetStream);
    s.confounded_class = static_cast<int>(
        pick.UniformInt(static_cast<std::uint64_t>(s.num_classes)));
    s.confounded_concept = static_cast<int>(
        pick.UniformInt(static_cast<std::uint64_t>(s.num_concepts)));
    specs.push_back(s);
  }
  return specs;
}

SuiteRun RunSuite(const std::vector<ScenarioSpec>& specs,
                  const SuiteConfig& config) {
  if (specs.empty()) Fail(ErrorKind::kInvalidInput, "suite has no scenarios");
  if (config.methods.empty()) Fail(ErrorKind::kInvalidInput, "no methods");
  config.optim.Validate();
  SuiteRun run;
  run.config = config;
  run.scenarios.resize(specs.size());
  ParallelFor(static_cast<int>(specs.size()), config.threads, [&](int i) {
    run.scenarios[i] = RunScenario(specs[i], i, config);
  });
  return run;
}

MethodStats ComputeMethodStats(const std::vector<int>& ranks) {
  MethodStats s;
  for (int k = 1; k <= kMaxK; ++k) s.precision_at_k[k - 1] = PrecisionAtK(ranks, k);
  const RankStats r = ComputeRankStats(ranks);
  s.median_rank = r.median;
  s.q1_rank = r.q1;
  s.q3_rank = r.q3;
  return s;
}

EvalSummary Summarize(const SuiteRun& run) {
  EvalSummary summary;
  for (const ScenarioOutcome& o : run.scenarios) {
    ScenarioSummary s;
    s.seed = o.spec.seed;
    s.target = o.target;
    s.n_mistakes = o.n_mistakes;
    s.excluded = !o.skip_reason.empty();
    if (s.excluded) {
      summary.warnings.push_back("scenario seed " + std::to_string(o.spec.seed) +
                                 " excluded: " + o.skip_reason);
    }
    for (const auto& [method, ranks] : o.ranks) {
      s.methods[method] = ComputeMethodStats(ranks);
    }
    summary.scenarios.push_back(std::move(s));
  }
  for (const ScenarioSummary& s : summary.scenarios) {
    if (s.excluded) continue;
    for (const auto& [method, stats] : s.methods) {
      MethodAggregate& a = summary.aggregate[method];
      for (int k = 0; k < kMaxK; ++k) {
        a.mean_precision_at_k[k] += stats.precision_at_k[k];
      }
      a.mean_median_rank += stats.median_rank;
      a.mean_q1_rank += stats.q1_rank;
      a.mean_q3_rank += stats.q3_rank;
      ++a.n_scenarios;
    }
  }
  for (auto& [method, a] : summary.aggregate) {
    const double n = a.n_scenarios;
    for (double& p : a.mean_precision_at_k) p /= n;
    a.mean_median_rank /= n;
    a.mean_q1_rank /= n;
    a.mean_q3_rank /= n;
  }
  return summary;
}

Json SummaryToJson(const EvalSummary& summary) {
  Json scenarios = Json::array();
  for (const ScenarioSummary& s : summary.scenarios) {
    Json methods = Json::object();
    for (const auto& [method, stats] : s.methods) {
      methods[method] = StatsToJson(stats);
    }
    scenarios.push_back({{"seed", s.seed},
                         {"target", s.target},
                         {"n_mistakes", s.n_mistakes},
                         {"excluded", s.excluded},
                         {"methods", methods}});
  }
  Json aggregate = Json::object();
  for (const auto& [method, a] : summary.aggregate) {
    aggregate[method] = {{"mean_precision_at_k", a.mean_precision_at_k},
                         {"mean_median_rank", a.mean_median_rank},
                         {"mean_q1_rank", a.mean_q1_rank},
                         {"mean_q3_rank", a.mean_q3_rank},
                         {"n_scenarios", a.n_scenarios}};
  }
  return {{"scenarios", scenarios},
          {"aggregate", aggregate},
          {"warnings", summary.warnings}};
}

Json SuiteReportToJson(const SuiteRun& run, const EvalSummary& summary) {
  Json methods = Json::array();
  for (Method m : run.config.methods) methods.push_back(MethodName(m));
  Json scenarios = Json::array();
  for (const ScenarioOutcome& o : run.scenarios) {
    scenarios.push_back({{"spec", SpecToJson(o.spec)},
                         {"target", o.target},
                         {"train_accuracy", o.train_accuracy},
                         {"bank_size", o.bank_size},
                         {"n_mistakes", o.n_mistakes},
                         {"skip_reason", o.skip_reason},
                         {"ranks", o.ranks}});
  }
  return {{"config",
           {{"methods", methods},
            {"optim", OptimToJson(run.config.optim)},
            {"seed", run.config.seed}}},
          {"scenarios", scenarios},
          {"summary", SummaryToJson(summary)}};
}

SuiteRun SuiteRunFromJson(const Json& report) {
  SuiteRun run;
  try {
    const Json& config = report.at("config");
    run.config.methods.clear();
    for (const Json& m : config.at("methods")) {
      const auto method = ParseMethod(m.get<std::string>());
      if (!method) {
        Fail(ErrorKind::kInvalidInput, "report: unknown method " + m.dump());
      }
      run.config.methods.push_back(*method);
    }
    run.config.optim = OptimFromJson(config.at("optim"));
    run.config.seed = config.at("seed").get<std::uint64_t>();
    for (const Json& s : report.at("scenarios")) {
      ScenarioOutcome o;
      o.spec = SpecFromJson(s.at("spec"));
      o.target = s.at("target").get<std::string>();
      o.train_accuracy = s.at("train_accuracy").get<double>();
      o.bank_size = s.at("bank_size").get<int>();
      o.n_mistakes = s.at("n_mistakes").get<int>();
      o.skip_reason = s.at("skip_reason").get<std::string>();
      o.ranks = s.at("ranks").get<std::map<std::string, std::vector<int>>>();
      run.scenarios.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidInput, std::string("report: ") + e.what());
  }
  return run;
}

}  // namespace cce
