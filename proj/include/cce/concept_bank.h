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

// Concept activation vectors. Each concept is learned as a linear max-margin
// classifier separating embeddings that show the concept from embeddings that
// do not; the unit normal of its decision boundary is the concept direction.

#ifndef CCE_CONCEPT_BANK_H_
#define CCE_CONCEPT_BANK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cce/numerics.h"
#include "cce/rng.h"

namespace cce {

struct ConceptExamples {
  std::string name;
  std::vector<Vector> positives;
  std::vector<Vector> negatives;
};

// Hinge-loss + L2 linear SVM solved by stochastic subgradient descent with a
// 1/(lambda t) step schedule. The intercept is learned as the weight of an
// appended constant feature.
struct SvmConfig {
  double lambda = 1e-3;
  int epochs = 200;
};

struct ConceptVector {
  std::string name;
  Vector direction;  // unit norm
  double intercept = 0.0;
  double val_accuracy = 0.0;
  // Extremal signed scores over the training split.
  double pos_score_max = 0.0;
  double neg_score_min = 0.0;
};

// Signed score direction . e + intercept; > 0 means the concept is predicted
// present.
double ConceptScore(const ConceptVector& concept_vector, const Vector& e);

ConceptVector LearnCav(const ConceptExamples& examples, double split_fraction,
                       Rng& rng, const SvmConfig& config = {});

class ConceptBank {
 public:
  ConceptBank() = default;
  // Validates: shared dim, unit directions, unique names, accuracies at or
  // above the threshold.
  ConceptBank(std::vector<ConceptVector> concepts, double accuracy_threshold);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(concepts_.size()); }
  bool empty() const { return concepts_.empty(); }
  double accuracy_threshold() const { return threshold_; }
  const std::vector<ConceptVector>& concepts() const { return concepts_; }
  const ConceptVector& operator[](int i) const { return concepts_[i]; }

  std::optional<int> IndexOf(const std::string& name) const;
  std::vector<std::string> Names() const;

  // Concept directions stacked as rows (size() x dim()).
  const Matrix& directions() const { return directions_; }
  // All concept scores for one embedding.
  Vector Scores(const Vector& e) const;

  // Same bank without concept `index`; throws kEmptyBank if that would leave
  // nothing.
  ConceptBank Without(int index) const;

 private:
  std::vector<ConceptVector> concepts_;
  Matrix directions_;
  Vector intercepts_;
  int dim_ = 0;
  double threshold_ = 0.0;
};

// Learns every concept and keeps those whose validation accuracy is at least
// `threshold`, in input order. Concept i trains on `rng.Derive(i)`, so the
// result does not depend on evaluation order.
ConceptBank BuildBank(const std::vector<ConceptExamples>& all_examples,
                      double threshold, double split_fraction, const Rng& rng,
                      const SvmConfig& config = {}, int threads = 1);

// Keeps concepts whose accuracy is >= threshold; throws kEmptyBank if none do.
ConceptBank FilterByAccuracy(const std::vector<ConceptVector>& learned,
                             double threshold);

}  // namespace cce

#endif  // CCE_CONCEPT_BANK_H_
