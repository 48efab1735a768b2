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

// cce: command-line front end for concept banks, counterfactual explanations,
// baselines, and scenario suites.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cce/concept_bank.h"
#include "cce/errors.h"
#include "cce/explainer.h"
#include "cce/harness.h"
#include "cce/io.h"
#include "cce/scenarios.h"

namespace {

using cce::Json;

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

void AddOptimFlags(CLI::App* app, cce::OptimConfig* c) {
  app->add_option("--alpha", c->alpha, "L1 weight")->capture_default_str();
  app->add_option("--beta", c->beta, "L2-norm weight")->capture_default_str();
  app->add_option("--step-size", c->step_size)->capture_default_str();
  app->add_option("--max-steps", c->max_steps)->capture_default_str();
  app->add_option("--beta1", c->beta1, "first-moment decay")
      ->capture_default_str();
  app->add_option("--beta2", c->beta2, "second-moment decay")
      ->capture_default_str();
  app->add_option("--max-halvings", c->max_halvings)->capture_default_str();
  app->add_option("--tolerance", c->tolerance)->capture_default_str();
}

void AddSpecFlags(CLI::App* app, cce::ScenarioSpec* s) {
  app->add_option("--dim", s->dim)->capture_default_str();
  app->add_option("--num-classes", s->num_classes)->capture_default_str();
  app->add_option("--num-concepts", s->num_concepts)->capture_default_str();
  app->add_option("--train-per-class", s->train_per_class)
      ->capture_default_str();
  app->add_option("--ood-test-count", s->ood_test_count)->capture_default_str();
  app->add_option("--noise-sigma", s->noise_sigma)->capture_default_str();
  app->add_option("--background-rate", s->background_rate)
      ->capture_default_str();
  app->add_option("--concept-noise-sigma", s->concept_noise_sigma)
      ->capture_default_str();
  app->add_option("--concept-examples", s->concept_examples)
      ->capture_default_str();
  app->add_option("--accuracy-threshold", s->accuracy_threshold)
      ->capture_default_str();
  app->add_option("--split-fraction", s->split_fraction)->capture_default_str();
  app->add_option("--head-epochs", s->head_epochs)->capture_default_str();
  app->add_option("--head-lr", s->head_learning_rate)->capture_default_str();
}

struct ExplainInputs {
  std::string head_path;
  std::string bank_path;
  std::string embeddings_path;
  std::vector<int> indices;
  int top_k = 10;
  std::string out_path;
};

void AddExplainInputs(CLI::App* app, ExplainInputs* in) {
  app->add_option("--head", in->head_path, "head JSON")->required();
  app->add_option("--bank", in->bank_path, "bank JSON")->required();
  app->add_option("--embeddings", in->embeddings_path,
                  "CCE1 embedding file with a label sidecar")
      ->required();
  app->add_option("--index", in->indices, "rows to use (default: all)");
  app->add_option("--top-k", in->top_k)->capture_default_str();
  app->add_option("--out", in->out_path, "output JSON (default: stdout)");
}

struct Loaded {
  cce::ModelHead head;
  cce::ConceptBank bank;
  cce::EmbeddingSet set;
  std::vector<int> rows;
};

Loaded Load(const ExplainInputs& in) {
  Loaded l{cce::HeadFromJson(cce::ReadJsonFile(in.head_path)),
           cce::BankFromJson(cce::ReadJsonFile(in.bank_path)),
           cce::ReadEmbeddingFile(in.embeddings_path),
           {}};
  if (l.set.labels.empty()) {
    cce::Fail(cce::ErrorKind::kInvalidInput,
              in.embeddings_path + ": labels sidecar required");
  }
  if (in.indices.empty()) {
    for (std::size_t i = 0; i < l.set.rows.size(); ++i) {
      l.rows.push_back(static_cast<int>(i));
    }
  } else {
    for (int i : in.indices) {
      if (i < 0 || i >= static_cast<int>(l.set.rows.size())) {
        cce::Fail(cce::ErrorKind::kInvalidInput,
                  "--index " + std::to_string(i) + " out of range");
      }
      l.rows.push_back(i);
    }
  }
  if (in.top_k < 1) cce::Fail(cce::ErrorKind::kInvalidInput, "--top-k >= 1");
  return l;
}

void Emit(const Json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
  } else {
    cce::WriteTextFile(path, text);
  }
}

Json TopK(const std::vector<cce::RankedConcept>& ranking, int k) {
  Json out = Json::array();
  for (int r = 0; r < std::min<int>(k, static_cast<int>(ranking.size())); ++r) {
    out.push_back({{"concept", ranking[r].name},
                   {"score", ranking[r].score},
                   {"rank", ranking[r].rank}});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conceptual counterfactual explanations"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every randomized step")
      ->capture_default_str();

  // learn-bank
  auto* learn = app.add_subcommand("learn-bank", "learn concept vectors");
  std::string manifest_path, bank_out;
  double threshold = 0.7, split = 0.25;
  cce::SvmConfig svm;
  int threads = 1;
  learn->add_option("--concepts", manifest_path,
                    "JSON {concepts: [{name, positives, negatives}]}")
      ->required();
  learn->add_option("--out", bank_out, "bank JSON")->required();
  learn->add_option("--threshold", threshold)->capture_default_str();
  learn->add_option("--split", split, "held-out fraction")
      ->capture_default_str();
  learn->add_option("--lambda", svm.lambda)->capture_default_str();
  learn->add_option("--epochs", svm.epochs)->capture_default_str();
  learn->add_option("--threads", threads)->capture_default_str();
  learn->add_option("--seed", seed)->capture_default_str();

  // explain / explain-batch / baselines
  cce::OptimConfig optim;
  ExplainInputs in;
  auto* explain = app.add_subcommand("explain", "per-sample explanations");
  AddExplainInputs(explain, &in);
  AddOptimFlags(explain, &optim);
  explain->add_option("--seed", seed)->capture_default_str();
  auto* batch = app.add_subcommand("explain-batch",
                                   "one shared explanation for all rows");
  AddExplainInputs(batch, &in);
  AddOptimFlags(batch, &optim);
  batch->add_option("--seed", seed)->capture_default_str();
  auto* css = app.add_subcommand("baseline-css", "concept sensitivity ranking");
  AddExplainInputs(css, &in);
  css->add_option("--seed", seed)->capture_default_str();
  auto* uni = app.add_subcommand("baseline-univariate",
                                 "one-concept-at-a-time ranking");
  AddExplainInputs(uni, &in);
  uni->add_option("--seed", seed)->capture_default_str();

  // gen-scenario
  cce::ScenarioSpec spec;
  std::string out_dir;
  auto* gen = app.add_subcommand("gen-scenario", "write a synthetic world");
  auto load_spec = [&spec](const std::string& path) {
    spec = cce::SpecFromJson(cce::ReadJsonFile(path));
  };
  gen->add_option_function<std::string>("--spec", load_spec,
                                        "spec JSON; explicit flags override")
      ->trigger_on_parse();
  AddSpecFlags(gen, &spec);
  gen->add_option("--confounded-class", spec.confounded_class)
      ->capture_default_str();
  gen->add_option("--confounded-concept", spec.confounded_concept)
      ->capture_default_str();
  gen->add_option("--severity", spec.severity)->capture_default_str();
  gen->add_option("--out-dir", out_dir)->required();
  gen->add_option("--threads", threads)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();

  // run-suite
  int scenarios = 20;
  double severity = 1.0;
  std::vector<std::string> methods;
  std::string report_out;
  auto* suite = app.add_subcommand("run-suite", "evaluate a scenario suite");
  suite->add_option("--scenarios", scenarios)->capture_default_str();
  suite->add_option("--severity", severity)->capture_default_str();
  suite->add_option("--methods", methods,
                    "cce, cce_univariate, css, random, control (default all)");
  suite->add_option_function<std::string>("--spec", load_spec,
                                          "base spec JSON; flags override")
      ->trigger_on_parse();
  AddSpecFlags(suite, &spec);
  AddOptimFlags(suite, &optim);
  suite->add_option("--threads", threads)->capture_default_str();
  suite->add_option("--out", report_out, "report JSON")->required();
  suite->add_option("--seed", seed)->capture_default_str();

  // export-report
  std::string report_in, summary_out;
  bool check = false;
  auto* exp = app.add_subcommand("export-report",
                                 "re-summarize a persisted suite report");
  exp->add_option("--report", report_in)->required();
  exp->add_option("--out", summary_out, "summary JSON (default: stdout)");
  exp->add_flag("--check", check,
                "fail unless the regenerated summary equals the stored one");
  exp->add_option("--seed", seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    optim.seed = seed;
    if (*learn) {
      const auto examples = cce::LoadConceptManifest(manifest_path);
      const cce::ConceptBank bank =
          cce::BuildBank(examples, threshold, split, cce::Rng(seed), svm,
                         threads);
      Emit(cce::BankToJson(bank), bank_out);
      std::fprintf(stderr, "kept %d of %zu concepts\n", bank.size(),
                   examples.size());
    } else if (*explain) {
      const Loaded l = Load(in);
      Json out = Json::array();
      for (int r : l.rows) {
        const auto t0 = std::chrono::steady_clock::now();
        const cce::CCEResult res = cce::CceExplain(
            l.set.rows[r], l.set.labels[r], l.head, l.bank, optim);
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        out.push_back(cce::ExplanationToJson(l.set.sample_ids[r],
                                             l.set.labels[r], res, in.top_k,
                                             ms));
      }
      Emit(out, in.out_path);
    } else if (*batch) {
      const Loaded l = Load(in);
      std::vector<cce::LabeledEmbedding> samples;
      Json ids = Json::array();
      for (int r : l.rows) {
        samples.push_back({l.set.rows[r], l.set.labels[r]});
        ids.push_back(l.set.sample_ids[r]);
      }
      const cce::CCEResult res = cce::CceBatch(samples, l.head, l.bank, optim);
      Json before = Json::array(), after = Json::array();
      for (std::size_t i = 0; i < samples.size(); ++i) {
        before.push_back({{"class", res.prediction_before[i].predicted_class},
                          {"confidence", res.prediction_before[i].confidence}});
        after.push_back({{"class", res.prediction_after[i].predicted_class},
                         {"confidence", res.prediction_after[i].confidence}});
      }
      Json top = Json::array();
      for (int k = 0;
           k < std::min<int>(in.top_k, static_cast<int>(res.ranking.size()));
           ++k) {
        const auto& c = res.ranking[k];
        top.push_back({{"concept", c.name},
                       {"score", c.score},
                       {"w_min", res.bounds.w_min(c.index)},
                       {"w_max", res.bounds.w_max(c.index)},
                       {"rank", c.rank}});
      }
      Emit({{"sample_ids", ids},
            {"prediction_before", before},
            {"prediction_after", after},
            {"top_k", top},
            {"loss_initial", res.loss_initial},
            {"loss_final", res.loss_final},
            {"steps", res.steps}},
           in.out_path);
    } else if (*css || *uni) {
      const Loaded l = Load(in);
      Json out = Json::array();
      for (int r : l.rows) {
        const auto ranking =
            *css ? cce::CssRanking(l.set.rows[r], l.set.labels[r], l.head,
                                   l.bank)
                 : cce::CceUnivariate(l.set.rows[r], l.set.labels[r], l.head,
                                      l.bank);
        out.push_back({{"sample_id", l.set.sample_ids[r]},
                       {"label", l.set.labels[r]},
                       {"top_k", TopK(ranking, in.top_k)}});
      }
      Emit(out, in.out_path);
    } else if (*gen) {
      if (gen->count("--seed") > 0 || app.count("--seed") > 0) spec.seed = seed;
      spec.Validate();
      const cce::ScenarioWorld world =
          cce::GenerateWorld(spec, nullptr, threads);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path dir(out_dir);
      auto write_set = [&](const std::string& name,
                           const std::vector<cce::ScenarioSample>& samples) {
        cce::EmbeddingSet set;
        set.dim = spec.dim;
        for (const auto& s : samples) {
          set.rows.push_back(s.embedding);
          set.labels.push_back(s.label);
        }
        cce::WriteEmbeddingFile((dir / name).string(), set);
      };
      write_set("train.cce", world.train_set);
      write_set("ood.cce", world.ood_set);
      cce::EmbeddingSet mistakes;
      mistakes.dim = spec.dim;
      for (std::size_t i = 0; i < world.ood_set.size(); ++i) {
        const auto& s = world.ood_set[i];
        if (world.head.Forward(s.embedding).predicted_class != s.label) {
          mistakes.rows.push_back(s.embedding);
          mistakes.labels.push_back(s.label);
          mistakes.sample_ids.push_back("ood_" + std::to_string(i));
        }
      }
      cce::WriteEmbeddingFile((dir / "mistakes.cce").string(), mistakes);
      Emit(cce::HeadToJson(world.head), (dir / "head.json").string());
      Emit(cce::BankToJson(world.bank), (dir / "bank.json").string());
      Json spec_json = cce::SpecToJson(spec);
      spec_json["target"] = world.target_name();
      spec_json["train_accuracy"] = world.train_accuracy;
      Emit(spec_json, (dir / "spec.json").string());
      std::fprintf(stderr, "train acc %.3f, bank %d, OOD mistakes %zu\n",
                   world.train_accuracy, world.bank.size(),
                   mistakes.rows.size());
    } else if (*suite) {
      cce::SuiteConfig config;
      config.optim = optim;
      config.optim.seed = seed;
      config.seed = seed;
      config.threads = threads;
      if (!methods.empty()) {
        config.methods.clear();
        for (const std::string& m : methods) {
          const auto method = cce::ParseMethod(m);
          if (!method) {
            cce::Fail(cce::ErrorKind::kInvalidInput, "unknown method " + m);
          }
          config.methods.push_back(*method);
        }
      }
      const auto specs = cce::DefaultSuite(scenarios, seed, severity, spec);
      const cce::SuiteRun run = cce::RunSuite(specs, config);
      const cce::EvalSummary summary = cce::Summarize(run);
      for (const std::string& w : summary.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
      }
      Emit(cce::SuiteReportToJson(run, summary), report_out);
      for (const auto& [method, a] : summary.aggregate) {
        std::fprintf(stderr, "%-15s Prec@3 %.3f  median rank %.2f (%.2f, %.2f)\n",
                     method.c_str(), a.mean_precision_at_k[2],
                     a.mean_median_rank, a.mean_q1_rank, a.mean_q3_rank);
      }
    } else if (*exp) {
      const Json report = cce::ReadJsonFile(report_in);
      const Json regenerated =
          cce::SummaryToJson(cce::Summarize(cce::SuiteRunFromJson(report)));
      if (check && (!report.contains("summary") ||
                    report["summary"].dump() != regenerated.dump())) {
        std::fprintf(stderr, "summary mismatch\n");
        return kExitInvalid;
      }
      Emit(regenerated, summary_out);
    }
  } catch (const cce::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", cce::ErrorKindName(e.kind()),
                 e.what());
    return e.kind() == cce::ErrorKind::kNumericalFailure ? kExitNumerical
                                                         : kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return 0;
}
