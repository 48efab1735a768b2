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

#include "cce/explainer.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>

#include "cce/errors.h"

namespace cce {

namespace {

void CheckCompatible(const ModelHead& head, const ConceptBank& bank) {
  if (bank.empty()) Fail(ErrorKind::kEmptyBank, "concept bank is empty");
  if (head.input_dim() != bank.dim()) {
    Fail(ErrorKind::kInvalidInput,
         "head input dim " + std::to_string(head.input_dim()) +
             " != bank dim " + std::to_string(bank.dim()));
  }
}

void CheckLabel(const ModelHead& head, int label) {
  if (label < 0 || label >= head.num_classes()) {
    Fail(ErrorKind::kIndex, "label " + std::to_string(label) +
                                " out of range [0, " +
                                std::to_string(head.num_classes()) + ")");
  }
}

double Sign(double x) { return (x > 0.0) - (x < 0.0); }

// Objective and its (sub)gradient at w. The shift w C is shared by all samples.
struct Evaluation {
  double loss = 0.0;
  Vector grad;
};

class Objective {
 public:
  Objective(const std::vector<LabeledEmbedding>& samples, const ModelHead& head,
            const ConceptBank& bank, double alpha, double beta)
      : samples_(samples), head_(head), bank_(bank), alpha_(alpha),
        beta_(beta) {}

  double Penalty(const Vector& w) const {
    return alpha_ * w.lpNorm<1>() + beta_ * w.norm();
  }

  // Inputs were validated up front, so any library error raised while
  // evaluating the head comes from an overflow; it is reported as NaN and
  // turned into a NumericalFailure by the solver.
  double Loss(const Vector& w) const {
    try {
      const Vector shift = bank_.directions().transpose() * w;
      double ce = 0.0;
      for (const LabeledEmbedding& s : samples_) {
        const Vector logits = head_.Logits(s.embedding + shift);
        ce += CrossEntropy(logits, s.label).loss;
      }
      return ce / static_cast<double>(samples_.size()) + Penalty(w);
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }

  Evaluation LossAndGrad(const Vector& w) const {
    const Vector shift = bank_.directions().transpose() * w;
    double ce = 0.0;
    Vector input_grad = Vector::Zero(bank_.dim());
    try {
      for (const LabeledEmbedding& s : samples_) {
        auto lg = head_.GradWrtInput(s.embedding + shift, s.label);
        ce += lg.loss;
        input_grad += lg.grad;
      }
    } catch (const Error&) {
      return {std::numeric_limits<double>::quiet_NaN(), Vector::Zero(w.size())};
    }
    const double n = static_cast<double>(samples_.size());
    Evaluation out;
    out.loss = ce / n + Penalty(w);
    out.grad = bank_.directions() * (input_grad / n);
    // Minimum-norm element of the subdifferential. A zero coordinate only
    // gets a nonzero entry once its smooth gradient exceeds alpha.
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double g = out.grad(i);
      out.grad(i) = w(i) != 0.0
                        ? g + alpha_ * Sign(w(i))
                        : Sign(g) * std::max(0.0, std::abs(g) - alpha_);
    }
    const double norm = w.norm();
    if (norm > 0.0) {
      out.grad += (beta_ / norm) * w;
    } else {
      const double g_norm = out.grad.norm();
      out.grad *= g_norm <= beta_ ? 0.0 : 1.0 - beta_ / g_norm;
    }
    return out;
  }

 private:
  const std::vector<LabeledEmbedding>& samples_;
  const ModelHead& head_;
  const ConceptBank& bank_;
  double alpha_;
  double beta_;
};

void CheckFinite(double loss, const Vector& grad, int step) {
  if (!std::isfinite(loss) || !grad.allFinite()) {
    throw NumericalFailure("non-finite objective at step " +
                               std::to_string(step),
                           step);
  }
}

std::vector<RankedConcept> RankBy(const Vector& scores, const ConceptBank& bank,
                                  bool by_magnitude) {
  if (scores.size() != bank.size()) {
    Fail(ErrorKind::kInvalidInput, "score count != bank size");
  }
  std::vector<int> order(static_cast<std::size_t>(bank.size()));
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int i) {
    return by_magnitude ? std::abs(scores(i)) : scores(i);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return key(a) > key(b); });
  std::vector<RankedConcept> out;
  out.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int i = order[r];
    out.push_back({bank[i].name, i, scores(i), static_cast<int>(r) + 1});
  }
  return out;
}

}  // namespace

void OptimConfig::Validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    Fail(ErrorKind::kInvalidInput, "optim config: alpha, beta must be >= 0");
  }
  if (!(step_size > 0.0) || max_steps < 1 || max_halvings < 0) {
    Fail(ErrorKind::kInvalidInput,
         "optim config: step_size > 0, max_steps >= 1, max_halvings >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0) || !(tolerance >= 0.0)) {
    Fail(ErrorKind::kInvalidInput, "optim config: bad moment parameters");
  }
}

ValidityBounds ComputeValidityBounds(const Vector& e, const ConceptBank& bank) {
  if (bank.empty()) Fail(ErrorKind::kEmptyBank, "concept bank is empty");
  const Vector s = bank.Scores(e);
  // |s_i| carries rounding of at most dim * eps * (|e| + |intercept|) since
  // directions are unit norm. A bound inside that band means the concept is
  // at its extreme, so it snaps to exactly zero.
  const double rounding = 4.0 * bank.dim() *
                          std::numeric_limits<double>::epsilon();
  const double e_norm = e.norm();
  auto snap = [&](double bound, double stat, int i) {
    const double band =
        rounding * (e_norm + std::abs(bank[i].intercept) + std::abs(stat));
    return std::abs(bound) <= band ? 0.0 : bound;
  };
  ValidityBounds b;
  b.w_max.resize(bank.size());
  b.w_min.resize(bank.size());
  for (int i = 0; i < bank.size(); ++i) {
    b.w_max(i) = snap(std::max(0.0, bank[i].pos_score_max - s(i)),
                      bank[i].pos_score_max, i);
    b.w_min(i) = snap(std::min(0.0, bank[i].neg_score_min - s(i)),
                      bank[i].neg_score_min, i);
  }
  return b;
}

double CceObjective(const std::vector<LabeledEmbedding>& samples,
                    const ModelHead& head, const ConceptBank& bank,
                    const Vector& w, double alpha, double beta) {
  CheckCompatible(head, bank);
  return Objective(samples, head, bank, alpha, beta).Loss(w);
}

CCEResult CceExplain(const Vector& e, int label, const ModelHead& head,
                     const ConceptBank& bank, const OptimConfig& config,
                     const IterationObserver& observer) {
  return CceBatch({LabeledEmbedding{e, label}}, head, bank, config, observer);
}

CCEResult CceBatch(const std::vector<LabeledEmbedding>& samples,
                   const ModelHead& head, const ConceptBank& bank,
                   const OptimConfig& config,
                   const IterationObserver& observer) {
  config.Validate();
  CheckCompatible(head, bank);
  if (samples.empty()) Fail(ErrorKind::kInvalidInput, "empty batch");

  CCEResult result;
  result.bounds.w_min = Vector::Zero(bank.size());
  result.bounds.w_max = Vector::Zero(bank.size());
  for (const LabeledEmbedding& s : samples) {
    CheckLabel(head, s.label);
    RequireFinite(s.embedding, "embedding");
    const ValidityBounds b = ComputeValidityBounds(s.embedding, bank);
    result.bounds.w_min += b.w_min;
    result.bounds.w_max += b.w_max;
  }
  const double n = static_cast<double>(samples.size());
  result.bounds.w_min /= n;
  result.bounds.w_max /= n;
  const Vector& lo = result.bounds.w_min;
  const Vector& hi = result.bounds.w_max;

  const Objective objective(samples, head, bank, config.alpha, config.beta);
  Vector w = Vector::Zero(bank.size());
  Evaluation current = objective.LossAndGrad(w);
  CheckFinite(current.loss, current.grad, 0);
  result.loss_initial = current.loss;
  for (const LabeledEmbedding& s : samples) {
    result.prediction_before.push_back(head.Forward(s.embedding));
  }

  Vector m = Vector::Zero(bank.size());
  Vector v = Vector::Zero(bank.size());
  int moment_t = 0;
  int rejected_in_a_row = 0;
  int step = 0;
  while (step < config.max_steps) {
    ++step;
    ++moment_t;
    m = config.beta1 * m + (1.0 - config.beta1) * current.grad;
    v = config.beta2 * v +
        (1.0 - config.beta2) * current.grad.cwiseProduct(current.grad);
    const double m_corr = 1.0 - std::pow(config.beta1, moment_t);
    const double v_corr = 1.0 - std::pow(config.beta2, moment_t);
    const Vector direction =
        (m / m_corr).array() /
        ((v / v_corr).array().sqrt() + config.epsilon);
    // A squared gradient can overflow even when the gradient itself is finite.
    if (!v.allFinite() || !direction.allFinite()) {
      throw NumericalFailure(
          "non-finite optimizer moments at step " + std::to_string(step), step);
    }

    // Backtrack until the projected step does not raise the objective.
    bool accepted = false;
    Vector candidate;
    double candidate_loss = 0.0;
    double lr = config.step_size;
    for (int h = 0; h <= config.max_halvings; ++h, lr *= 0.5) {
      candidate = (w - lr * direction).cwiseMax(lo).cwiseMin(hi);
      candidate_loss = objective.Loss(candidate);
      if (!std::isfinite(candidate_loss)) {
        throw NumericalFailure(
            "non-finite objective at step " + std::to_string(step), step);
      }
      if (candidate_loss <= current.loss) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      // Stale moments point uphill; restart them from the current gradient.
      m.setZero();
      v.setZero();
      moment_t = 0;
      if (observer) observer(step, w, result.bounds);
      if (++rejected_in_a_row >= 2) break;
      continue;
    }
    rejected_in_a_row = 0;
    const double moved = (candidate - w).lpNorm<Eigen::Infinity>();
    w = std::move(candidate);
    assert((w.array() >= lo.array()).all() && (w.array() <= hi.array()).all());
    current = objective.LossAndGrad(w);
    CheckFinite(current.loss, current.grad, step);
    if (observer) observer(step, w, result.bounds);
    if (moved < config.tolerance) break;
  }

  result.steps = step;
  result.loss_final = current.loss;
  result.scores = w;
  result.ranking = RankByMagnitude(w, bank);
  const Vector shift = bank.directions().transpose() * w;
  for (const LabeledEmbedding& s : samples) {
    result.prediction_after.push_back(head.Forward(s.embedding + shift));
  }
  return result;
}

Vector UnivariateScores(const Vector& e, int label, const ModelHead& head,
                        const ConceptBank& bank) {
  CheckCompatible(head, bank);
  CheckLabel(head, label);
  const ValidityBounds bounds = ComputeValidityBounds(e, bank);
  const double base = head.Forward(e).probs(label);
  Vector scores(bank.size());
  for (int i = 0; i < bank.size(); ++i) {
    if (bounds.w_max(i) == 0.0) {
      scores(i) = 0.0;
      continue;
    }
    const Vector moved = e + bounds.w_max(i) * bank[i].direction;
    scores(i) = head.Forward(moved).probs(label) - base;
  }
  return scores;
}

std::vector<RankedConcept> CceUnivariate(const Vector& e, int label,
                                         const ModelHead& head,
                                         const ConceptBank& bank) {
  return RankDescending(UnivariateScores(e, label, head, bank), bank);
}

double Css(const Vector& e, int label, const ModelHead& head,
           const ConceptVector& concept_vector) {
  if (concept_vector.direction.size() != head.input_dim()) {
    Fail(ErrorKind::kInvalidInput, "concept dim != head input dim");
  }
  return head.LogitGrad(e, label).dot(concept_vector.direction);
}

Vector CssScores(const Vector& e, int label, const ModelHead& head,
                 const ConceptBank& bank) {
  CheckCompatible(head, bank);
  return bank.directions() * head.LogitGrad(e, label);
}

std::vector<RankedConcept> CssRanking(const Vector& e, int label,
                                      const ModelHead& head,
                                      const ConceptBank& bank) {
  return RankDescending(CssScores(e, label, head, bank), bank);
}

std::vector<RankedConcept> RankByMagnitude(const Vector& scores,
                                           const ConceptBank& bank) {
  return RankBy(scores, bank, /*by_magnitude=*/true);
}

std::vector<RankedConcept> RankDescending(const Vector& scores,
                                          const ConceptBank& bank) {
  return RankBy(scores, bank, /*by_magnitude=*/false);
}

}  // namespace cce
