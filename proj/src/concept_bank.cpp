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

#include "cce/concept_bank.h"

#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <utility>

#include "cce/errors.h"
#include "cce/parallel.h"

namespace cce {

namespace {

constexpr double kUnitNormTolerance = 1e-9;

void CheckExamples(const ConceptExamples& ex) {
  const std::string where = "concept '" + ex.name + "'";
  if (ex.positives.size() < 2 || ex.negatives.size() < 2) {
    Fail(ErrorKind::kInvalidInput,
         where + ": needs at least 2 positives and 2 negatives");
  }
  const Eigen::Index dim = ex.positives.front().size();
  for (const auto* set : {&ex.positives, &ex.negatives}) {
    for (const Vector& e : *set) {
      if (e.size() != dim) {
        Fail(ErrorKind::kInvalidInput, where + ": embedding dims differ");
      }
      RequireFinite(e, where + " example");
    }
  }
}

bool AllIdentical(const ConceptExamples& ex) {
  const Vector& first = ex.positives.front();
  for (const auto* set : {&ex.positives, &ex.negatives}) {
    for (const Vector& e : *set) {
      if (e != first) return false;
    }
  }
  return true;
}

// Holds out round(fraction * n) items (at least one, leaving at least one).
std::pair<std::vector<int>, std::vector<int>> SplitIndices(int n,
                                                           double fraction,
                                                           Rng& rng) {
  std::vector<int> perm = rng.Permutation(n);
  int n_val = static_cast<int>(std::lround(fraction * n));
  n_val = std::clamp(n_val, 1, n - 1);
  std::vector<int> val(perm.begin(), perm.begin() + n_val);
  std::vector<int> train(perm.begin() + n_val, perm.end());
  return {std::move(train), std::move(val)};
}

struct Sample {
  const Vector* x;
  double y;  // +1 / -1
};

}  // namespace

double ConceptScore(const ConceptVector& concept_vector, const Vector& e) {
  if (e.size() != concept_vector.direction.size()) {
    Fail(ErrorKind::kInvalidInput,
         "concept '" + concept_vector.name + "': embedding dim " +
             std::to_string(e.size()) + " != concept dim " +
             std::to_string(concept_vector.direction.size()));
  }
  return concept_vector.direction.dot(e) + concept_vector.intercept;
}

ConceptVector LearnCav(const ConceptExamples& examples, double split_fraction,
                       Rng& rng, const SvmConfig& config) {
  CheckExamples(examples);
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    Fail(ErrorKind::kInvalidInput, "split_fraction must be in (0, 1)");
  }
  if (!(config.lambda > 0.0) || config.epochs < 1) {
    Fail(ErrorKind::kInvalidInput, "svm config: lambda > 0, epochs >= 1");
  }
  if (AllIdentical(examples)) {
    Fail(ErrorKind::kTrainingFailure,
         "concept '" + examples.name + "': positives equal negatives");
  }
  const Eigen::Index dim = examples.positives.front().size();

  auto [pos_train, pos_val] = SplitIndices(
      static_cast<int>(examples.positives.size()), split_fraction, rng);
  auto [neg_train, neg_val] = SplitIndices(
      static_cast<int>(examples.negatives.size()), split_fraction, rng);

  std::vector<Sample> train;
  for (int i : pos_train) train.push_back({&examples.positives[i], 1.0});
  for (int i : neg_train) train.push_back({&examples.negatives[i], -1.0});

  // w = scale * v over the augmented input [x, 1]; keeping the shrink factor
  // as a scalar makes each step O(dim) only on margin violations.
  Vector v = Vector::Zero(dim);
  double v_bias = 0.0;
  double scale = 1.0;
  long long t = 0;
  std::vector<int> order(train.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order = rng.Permutation(static_cast<int>(train.size()));
    for (int idx : order) {
      const Sample& s = train[idx];
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const double margin = s.y * scale * (v.dot(*s.x) + v_bias);
      const double shrink = 1.0 - eta * config.lambda;
      if (shrink <= 0.0) {
        v.setZero();
        v_bias = 0.0;
        scale = 1.0;
      } else {
        scale *= shrink;
      }
      if (margin < 1.0) {
        const double step = eta * s.y / scale;
        v += step * *s.x;
        v_bias += step;
      }
      if (scale < 1e-9) {
        v *= scale;
        v_bias *= scale;
        scale = 1.0;
      }
    }
  }
  const Vector w = scale * v;
  const double b = scale * v_bias;
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm) || !std::isfinite(b)) {
    Fail(ErrorKind::kTrainingFailure,
         "concept '" + examples.name + "': degenerate separating direction");
  }

  ConceptVector out;
  out.name = examples.name;
  out.direction = w / norm;
  out.intercept = b / norm;

  int correct = 0;
  for (int i : pos_val) correct += ConceptScore(out, examples.positives[i]) > 0.0;
  for (int i : neg_val) correct += ConceptScore(out, examples.negatives[i]) <= 0.0;
  out.val_accuracy = static_cast<double>(correct) /
                     static_cast<double>(pos_val.size() + neg_val.size());

  out.pos_score_max = -std::numeric_limits<double>::infinity();
  for (int i : pos_train) {
    out.pos_score_max =
        std::max(out.pos_score_max, ConceptScore(out, examples.positives[i]));
  }
  out.neg_score_min = std::numeric_limits<double>::infinity();
  for (int i : neg_train) {
    out.neg_score_min =
        std::min(out.neg_score_min, ConceptScore(out, examples.negatives[i]));
  }
  if (out.neg_score_min > out.pos_score_max) {
    Fail(ErrorKind::kTrainingFailure,
         "concept '" + examples.name +
             "': every negative scores above every positive");
  }
  return out;
}

ConceptBank::ConceptBank(std::vector<ConceptVector> concepts,
                         double accuracy_threshold)
    : concepts_(std::move(concepts)), threshold_(accuracy_threshold) {
  if (concepts_.empty()) Fail(ErrorKind::kEmptyBank, "concept bank is empty");
  if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) {
    Fail(ErrorKind::kInvalidInput, "accuracy threshold must be in [0, 1]");
  }
  dim_ = static_cast<int>(concepts_.front().direction.size());
  std::set<std::string> names;
  directions_.resize(static_cast<Eigen::Index>(concepts_.size()), dim_);
  intercepts_.resize(static_cast<Eigen::Index>(concepts_.size()));
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    const ConceptVector& c = concepts_[i];
    const std::string where = "concept '" + c.name + "'";
    if (!names.insert(c.name).second) {
      Fail(ErrorKind::kInvalidInput, where + ": duplicate name");
    }
    if (c.direction.size() != dim_) {
      Fail(ErrorKind::kInvalidInput, where + ": dim mismatch");
    }
    RequireFinite(c.direction, where + " direction");
    if (std::abs(c.direction.norm() - 1.0) > kUnitNormTolerance) {
      Fail(ErrorKind::kInvalidInput, where + ": direction is not unit norm");
    }
    if (!std::isfinite(c.intercept) || !std::isfinite(c.pos_score_max) ||
        !std::isfinite(c.neg_score_min)) {
      Fail(ErrorKind::kInvalidInput, where + ": non-finite statistics");
    }
    if (c.neg_score_min > c.pos_score_max) {
      Fail(ErrorKind::kInvalidInput, where + ": neg_score_min > pos_score_max");
    }
    if (!(c.val_accuracy >= 0.0 && c.val_accuracy <= 1.0)) {
      Fail(ErrorKind::kInvalidInput, where + ": val_accuracy outside [0, 1]");
    }
    if (c.val_accuracy < threshold_) {
      Fail(ErrorKind::kInvalidInput, where + ": accuracy below bank threshold");
    }
    directions_.row(static_cast<Eigen::Index>(i)) = c.direction.transpose();
    intercepts_(static_cast<Eigen::Index>(i)) = c.intercept;
  }
}

std::optional<int> ConceptBank::IndexOf(const std::string& name) const {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<std::string> ConceptBank::Names() const {
  std::vector<std::string> out;
  out.reserve(concepts_.size());
  for (const ConceptVector& c : concepts_) out.push_back(c.name);
  return out;
}

Vector ConceptBank::Scores(const Vector& e) const {
  if (e.size() != dim_) {
    Fail(ErrorKind::kInvalidInput, "embedding dim " + std::to_string(e.size()) +
                                       " != bank dim " + std::to_string(dim_));
  }
  return directions_ * e + intercepts_;
}

ConceptBank ConceptBank::Without(int index) const {
  if (index < 0 || index >= size()) {
    Fail(ErrorKind::kIndex, "concept index out of range");
  }
  if (size() == 1) {
    Fail(ErrorKind::kEmptyBank, "removing the last concept empties the bank");
  }
  std::vector<ConceptVector> rest;
  rest.reserve(concepts_.size() - 1);
  for (int i = 0; i < size(); ++i) {
    if (i != index) rest.push_back(concepts_[i]);
  }
  return ConceptBank(std::move(rest), threshold_);
}

ConceptBank FilterByAccuracy(const std::vector<ConceptVector>& learned,
                             double threshold) {
  std::vector<ConceptVector> kept;
  for (const ConceptVector& c : learned) {
    if (c.val_accuracy >= threshold) kept.push_back(c);
  }
  if (kept.empty()) {
    Fail(ErrorKind::kEmptyBank, "no concept reached accuracy threshold " +
                                    std::to_string(threshold));
  }
  return ConceptBank(std::move(kept), threshold);
}

ConceptBank BuildBank(const std::vector<ConceptExamples>& all_examples,
                      double threshold, double split_fraction, const Rng& rng,
                      const SvmConfig& config, int threads) {
  if (all_examples.empty()) {
    Fail(ErrorKind::kInvalidInput, "no concepts to learn");
  }
  const std::size_t dim = all_examples.front().positives.empty()
                              ? 0
                              : all_examples.front().positives.front().size();
  for (const ConceptExamples& ex : all_examples) {
    if (ex.positives.empty() ||
        static_cast<std::size_t>(ex.positives.front().size()) != dim) {
      Fail(ErrorKind::kInvalidInput,
           "concept '" + ex.name + "': dim differs from the first concept");
    }
  }
  std::vector<ConceptVector> learned(all_examples.size());
  ParallelFor(static_cast<int>(all_examples.size()), threads, [&](int i) {
    Rng local = rng.Derive(static_cast<std::uint64_t>(i));
    learned[i] = LearnCav(all_examples[i], split_fraction, local, config);
  });
  return FilterByAccuracy(learned, threshold);
}

}  // namespace cce
