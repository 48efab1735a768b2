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

#include "cce/scenarios.h"

#include <cmath>
#include <cstdio>

#include "cce/errors.h"
#include "cce/rng.h"

namespace cce {

namespace {

// Independent sub-streams of the scenario seed.
enum Stream : std::uint64_t {
  kGeometryStream = 1,
  kTrainStream = 2,
  kOodStream = 3,
  kBankStream = 4,
};

constexpr double kCompanionCosine = 0.5;
constexpr double kMinTrainAccuracy = 0.6;

// Sum of directions whose flag is set.
Vector SumPresent(const std::vector<Vector>& directions,
                  const std::vector<bool>& present, int dim) {
  Vector out = Vector::Zero(dim);
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i]) out += directions[i];
  }
  return out;
}

std::vector<bool> BackgroundFlags(int count, double rate, Rng& rng) {
  std::vector<bool> flags(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) flags[i] = rng.Bernoulli(rate);
  return flags;
}

ScenarioSample MakeSample(const ScenarioSpec& spec, const WorldGeometry& g,
                          int label, std::vector<bool> present, Rng& rng) {
  ScenarioSample s;
  s.label = label;
  s.embedding = g.class_prototypes[label] +
                SumPresent(g.concept_directions, present, spec.dim) +
                rng.NormalVector(spec.dim, spec.noise_sigma);
  s.present = std::move(present);
  return s;
}

}  // namespace

void ScenarioSpec::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) Fail(ErrorKind::kInvalidInput, std::string("scenario: ") + what);
  };
  require(dim >= 2, "dim >= 2");
  require(num_classes >= 2, "num_classes >= 2");
  require(num_concepts >= 1, "num_concepts >= 1");
  require(confounded_class >= 0 && confounded_class < num_classes,
          "confounded_class in range");
  require(confounded_concept >= 0 && confounded_concept < num_concepts,
          "confounded_concept in range");
  require(severity >= 0.0 && severity <= 1.0, "severity in [0, 1]");
  require(train_per_class >= 1 && ood_test_count >= 1, "counts >= 1");
  require(noise_sigma >= 0.0 && concept_noise_sigma >= 0.0, "sigmas >= 0");
  require(background_rate >= 0.0 && background_rate <= 1.0,
          "background_rate in [0, 1]");
  require(concept_examples >= 4, "concept_examples >= 4");
  require(split_fraction > 0.0 && split_fraction < 1.0,
          "split_fraction in (0, 1)");
  require(head_epochs >= 1 && head_learning_rate > 0.0, "head training config");
  if (companion_concept) {
    require(*companion_concept >= 0 && *companion_concept < num_concepts &&
                *companion_concept != confounded_concept,
            "companion concept in range and distinct from the target");
  }
}

std::string ConceptName(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "concept_%03d", index);
  return buf;
}

std::string ScenarioWorld::target_name() const {
  return ConceptName(spec.confounded_concept);
}

WorldGeometry GenerateGeometry(const ScenarioSpec& spec) {
  spec.Validate();
  if (spec.dim < spec.num_classes + spec.num_concepts) {
    std::fprintf(stderr,
                 "warning: dim %d < classes + concepts %d; directions will "
                 "overlap\n",
                 spec.dim, spec.num_classes + spec.num_concepts);
  }
  Rng rng = Rng(spec.seed).Derive(kGeometryStream);
  WorldGeometry g;
  for (int c = 0; c < spec.num_classes; ++c) {
    g.class_prototypes.push_back(rng.UnitVector(spec.dim));
  }
  for (int i = 0; i < spec.num_concepts; ++i) {
    g.concept_directions.push_back(rng.UnitVector(spec.dim));
  }
  if (spec.companion_concept) {
    const Vector& target = g.concept_directions[spec.confounded_concept];
    Vector& companion = g.concept_directions[*spec.companion_concept];
    companion -= companion.dot(target) * target;
    companion.normalize();
    companion = kCompanionCosine * target +
                std::sqrt(1.0 - kCompanionCosine * kCompanionCosine) * companion;
  }
  return g;
}

std::vector<ConceptExamples> GenerateConceptExamples(
    const ScenarioSpec& spec, const WorldGeometry& geometry) {
  const Rng root = Rng(spec.seed).Derive(kBankStream);
  std::vector<ConceptExamples> out(static_cast<std::size_t>(spec.num_concepts));
  for (int k = 0; k < spec.num_concepts; ++k) {
    Rng rng = root.Derive(static_cast<std::uint64_t>(k));
    ConceptExamples& ex = out[k];
    ex.name = ConceptName(k);
    auto context = [&]() -> Vector {
      std::vector<bool> flags =
          BackgroundFlags(spec.num_concepts, spec.background_rate, rng);
      flags[k] = false;
      return SumPresent(geometry.concept_directions, flags, spec.dim) +
             rng.NormalVector(spec.dim, spec.concept_noise_sigma);
    };
    for (int j = 0; j < spec.concept_examples; ++j) {
      ex.positives.push_back(geometry.concept_directions[k] + context());
    }
    for (int j = 0; j < spec.concept_examples; ++j) {
      ex.negatives.push_back(context());
    }
  }
  return out;
}

ConceptBank BuildScenarioBank(const ScenarioSpec& spec,
                              const WorldGeometry& geometry, int threads) {
  const std::vector<ConceptExamples> examples =
      GenerateConceptExamples(spec, geometry);
  // Per-concept streams for the SVM are derived from a stream distinct from
  // the one that generated the examples.
  const Rng svm_rng = Rng(spec.seed).Derive(kBankStream).Derive(~0ULL);
  return BuildBank(examples, spec.accuracy_threshold, spec.split_fraction,
                   svm_rng, SvmConfig{}, threads);
}

ModelHead TrainLinearHead(const std::vector<ScenarioSample>& data,
                          int num_classes, int epochs, double learning_rate) {
  if (data.empty()) Fail(ErrorKind::kInvalidInput, "no training data");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index dim = data.front().embedding.size();
  Matrix x(n, dim);
  Matrix onehot = Matrix::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = data[i].embedding.transpose();
    onehot(i, data[i].label) = 1.0;
  }
  Matrix w = Matrix::Zero(num_classes, dim);
  Vector b = Vector::Zero(num_classes);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Matrix z = x * w.transpose();
    z.rowwise() += b.transpose();
    z.colwise() -= z.rowwise().maxCoeff();
    z = z.array().exp();
    z.array().colwise() /= z.rowwise().sum().array();
    const Matrix g = (z - onehot) / static_cast<double>(n);
    w.noalias() -= learning_rate * g.transpose() * x;
    b -= learning_rate * g.colwise().sum().transpose();
  }
  return ModelHead::Linear(std::move(w), std::move(b));
}

ScenarioWorld GenerateWorld(const ScenarioSpec& spec,
                            const ConceptBank* shared_bank, int threads) {
  spec.Validate();
  WorldGeometry geometry = GenerateGeometry(spec);

  ScenarioWorld world;
  world.spec = spec;

  Rng train_rng = Rng(spec.seed).Derive(kTrainStream);
  const int n_confounded =
      static_cast<int>(std::ceil(spec.severity * spec.train_per_class - 1e-12));
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < spec.train_per_class; ++i) {
      std::vector<bool> present =
          BackgroundFlags(spec.num_concepts, spec.background_rate, train_rng);
      if (c == spec.confounded_class) {
        present[spec.confounded_concept] = i < n_confounded;
        // The companion co-occurs with the confound, as related concepts do.
        if (spec.companion_concept && i < n_confounded) {
          present[*spec.companion_concept] = true;
        }
      }
      world.train_set.push_back(
          MakeSample(spec, geometry, c, std::move(present), train_rng));
    }
  }

  Rng ood_rng = Rng(spec.seed).Derive(kOodStream);
  for (int i = 0; i < spec.ood_test_count; ++i) {
    std::vector<bool> present =
        BackgroundFlags(spec.num_concepts, spec.background_rate, ood_rng);
    present[spec.confounded_concept] = false;
    world.ood_set.push_back(MakeSample(spec, geometry, spec.confounded_class,
                                       std::move(present), ood_rng));
  }

  world.head = TrainLinearHead(world.train_set, spec.num_classes,
                               spec.head_epochs, spec.head_learning_rate);
  int correct = 0;
  for (const ScenarioSample& s : world.train_set) {
    correct += world.head.Forward(s.embedding).predicted_class == s.label;
  }
  world.train_accuracy =
      static_cast<double>(correct) / static_cast<double>(world.train_set.size());
  if (world.train_accuracy <= kMinTrainAccuracy) {
    Fail(ErrorKind::kDegenerateScenario,
         "head train accuracy " + std::to_string(world.train_accuracy) +
             " <= 0.6");
  }

  world.bank = shared_bank ? *shared_bank
                           : BuildScenarioBank(spec, geometry, threads);
  if (world.bank.dim() != spec.dim) {
    Fail(ErrorKind::kInvalidInput, "shared bank dim != scenario dim");
  }
  world.class_prototypes = std::move(geometry.class_prototypes);
  world.concept_directions = std::move(geometry.concept_directions);
  return world;
}

std::vector<LabeledEmbedding> CollectOodMistakes(const ScenarioWorld& world) {
  std::vector<LabeledEmbedding> out;
  for (const ScenarioSample& s : world.ood_set) {
    if (world.head.Forward(s.embedding).predicted_class != s.label) {
      out.push_back({s.embedding, s.label});
    }
  }
  return out;
}

ScenarioWorld AblateConcept(const ScenarioWorld& world, int bank_index) {
  ScenarioWorld out = world;
  out.bank = world.bank.Without(bank_index);
  return out;
}

}  // namespace cce
