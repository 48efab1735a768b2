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

// Synthetic spurious-correlation worlds. Embeddings are a class prototype plus
// the unit directions of every concept present plus Gaussian noise. One class
// is confounded with one concept: a `severity` fraction of its training
// samples carry the concept, and none of its out-of-distribution test samples
// do. A linear softmax head trained on such data learns to rely on the
// concept, so its OOD mistakes have a known ground-truth explanation.

#ifndef CCE_SCENARIOS_H_
#define CCE_SCENARIOS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cce/concept_bank.h"
#include "cce/explainer.h"
#include "cce/model_head.h"
#include "cce/numerics.h"

namespace cce {

struct ScenarioSpec {
  int dim = 512;
  int num_classes = 5;
  int num_concepts = 150;
  int confounded_class = 0;
  int confounded_concept = 0;
  double severity = 1.0;
  int train_per_class = 150;
  int ood_test_count = 50;
  double noise_sigma = 0.25;
  double background_rate = 0.1;
  // Noise on the bank's concept examples (kept separate from the world noise).
  double concept_noise_sigma = 0.1;
  int concept_examples = 100;  // positives and negatives per concept
  double accuracy_threshold = 0.7;
  double split_fraction = 0.25;
  int head_epochs = 300;
  double head_learning_rate = 1.0;
  // If set, this concept's direction is built with cosine 0.5 to the
  // confounded concept, and it is present in every training sample that
  // carries the confounded concept.
  std::optional<int> companion_concept;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct ScenarioSample {
  Vector embedding;
  int label = 0;
  std::vector<bool> present;  // concept presence flags
};

struct ScenarioWorld {
  ScenarioSpec spec;
  std::vector<Vector> class_prototypes;
  std::vector<Vector> concept_directions;
  std::vector<ScenarioSample> train_set;
  std::vector<ScenarioSample> ood_set;
  ModelHead head = ModelHead::Linear(Matrix::Zero(1, 1), Vector::Zero(1));
  ConceptBank bank;
  double train_accuracy = 0.0;

  // Bank name of the confounded concept.
  std::string target_name() const;
};

std::string ConceptName(int index);

// Concept directions and class prototypes; depend on (seed, dim, counts,
// companion) only.
struct WorldGeometry {
  std::vector<Vector> class_prototypes;
  std::vector<Vector> concept_directions;
};
WorldGeometry GenerateGeometry(const ScenarioSpec& spec);

// Positive/negative examples for every concept. Independent of severity.
std::vector<ConceptExamples> GenerateConceptExamples(
    const ScenarioSpec& spec, const WorldGeometry& geometry);

// Learns the bank for a spec (independent of severity, so worlds that differ
// only in severity can share one).
ConceptBank BuildScenarioBank(const ScenarioSpec& spec,
                              const WorldGeometry& geometry, int threads = 1);

// Softmax regression by full-batch gradient descent from zero weights.
ModelHead TrainLinearHead(const std::vector<ScenarioSample>& data,
                          int num_classes, int epochs, double learning_rate);

// Throws kDegenerateScenario if the trained head's train accuracy is <= 0.6.
// `shared_bank` skips bank learning; it must come from a spec with the same
// seed and geometry.
ScenarioWorld GenerateWorld(const ScenarioSpec& spec,
                            const ConceptBank* shared_bank = nullptr,
                            int threads = 1);

// OOD samples the head misclassifies, in generation order.
std::vector<LabeledEmbedding> CollectOodMistakes(const ScenarioWorld& world);

// Same world with the concept removed from the bank.
ScenarioWorld AblateConcept(const ScenarioWorld& world, int bank_index);

}  // namespace cce

#endif  // CCE_SCENARIOS_H_
