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

// Conceptual counterfactual explanations. Given a mistake (e, y), find concept
// weights w so that moving the embedding to e + sum_i w_i c_i makes the head
// predict y, while keeping w sparse and inside per-concept validity bounds:
//
//   min_w  mean_n CE(y_n, head(e_n + w C)) + alpha |w|_1 + beta |w|_2
//   s.t.   w_min <= w <= w_max
//
// Positive w_i reads as "adding concept i fixes the prediction", negative as
// "removing it does".

#ifndef CCE_EXPLAINER_H_
#define CCE_EXPLAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cce/concept_bank.h"
#include "cce/model_head.h"
#include "cce/numerics.h"

namespace cce {

struct ValidityBounds {
  Vector w_min;  // <= 0
  Vector w_max;  // >= 0
};

// w_max_i = max(0, pos_score_max_i - s_i), w_min_i = min(0, neg_score_min_i -
// s_i) with s_i the concept score of e. A concept already at its positive
// extreme cannot be added; one at its negative extreme cannot be removed.
ValidityBounds ComputeValidityBounds(const Vector& e, const ConceptBank& bank);

struct OptimConfig {
  double alpha = 0.1;  // L1 weight
  double beta = 0.9;   // weight of the (unsquared) L2 norm
  double step_size = 0.01;
  int max_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_halvings = 10;
  double tolerance = 1e-7;  // stop once an accepted step moves < this (inf-norm)
  std::uint64_t seed = 0;

  void Validate() const;
};

struct LabeledEmbedding {
  Vector embedding;
  int label = 0;
};

struct RankedConcept {
  std::string name;
  int index = 0;   // position in the bank
  double score = 0.0;
  int rank = 0;    // 1-based
};

struct CCEResult {
  Vector scores;  // w, one entry per bank concept
  ValidityBounds bounds;
  std::vector<RankedConcept> ranking;  // descending |score|
  double loss_initial = 0.0;
  double loss_final = 0.0;
  int steps = 0;
  // One entry per explained sample; single-sample calls hold exactly one.
  std::vector<Prediction<double>> prediction_before;
  std::vector<Prediction<double>> prediction_after;
};

// Called after every optimizer iteration with the current (projected) w.
using IterationObserver =
    std::function<void(int step, const Vector& w, const ValidityBounds& bounds)>;

CCEResult CceExplain(const Vector& e, int label, const ModelHead& head,
                     const ConceptBank& bank, const OptimConfig& config = {},
                     const IterationObserver& observer = nullptr);

// One shared w for the whole batch: mean cross-entropy, entrywise-mean bounds.
// A batch of one is computed identically to CceExplain.
CCEResult CceBatch(const std::vector<LabeledEmbedding>& samples,
                   const ModelHead& head, const ConceptBank& bank,
                   const OptimConfig& config = {},
                   const IterationObserver& observer = nullptr);

// Objective value at w (exposed for oracles and tests).
double CceObjective(const std::vector<LabeledEmbedding>& samples,
                    const ModelHead& head, const ConceptBank& bank,
                    const Vector& w, double alpha, double beta);

// score_i = p_y(e + w_max_i c_i) - p_y(e); ranked by descending score.
std::vector<RankedConcept> CceUnivariate(const Vector& e, int label,
                                         const ModelHead& head,
                                         const ConceptBank& bank);
Vector UnivariateScores(const Vector& e, int label, const ModelHead& head,
                        const ConceptBank& bank);

// Directional derivative of logit_y at e along the concept direction.
double Css(const Vector& e, int label, const ModelHead& head,
           const ConceptVector& concept_vector);
Vector CssScores(const Vector& e, int label, const ModelHead& head,
                 const ConceptBank& bank);
// Ranked by descending signed score.
std::vector<RankedConcept> CssRanking(const Vector& e, int label,
                                      const ModelHead& head,
                                      const ConceptBank& bank);

// Rankings; ties resolve to the lower bank index.
std::vector<RankedConcept> RankByMagnitude(const Vector& scores,
                                           const ConceptBank& bank);
std::vector<RankedConcept> RankDescending(const Vector& scores,
                                          const ConceptBank& bank);

}  // namespace cce

#endif  // CCE_EXPLAINER_H_
