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

// The "top" of a classifier: the map from a bottleneck embedding to class
// logits, restricted to affine layers with optional ReLU in between. Supports
// an exact backward pass to the input embedding, which is all the explainer
// needs.

#ifndef CCE_MODEL_HEAD_H_
#define CCE_MODEL_HEAD_H_

#include <string>
#include <utility>
#include <vector>

#include "cce/errors.h"
#include "cce/numerics.h"

namespace cce {

enum class Activation { kNone, kRelu };

inline const char* ActivationName(Activation a) {
  return a == Activation::kRelu ? "relu" : "none";
}

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;  // out x in
  VectorX<Scalar> bias;     // out
  Activation activation = Activation::kNone;
};

template <typename Scalar>
struct Prediction {
  VectorX<Scalar> logits;
  VectorX<Scalar> probs;
  int predicted_class = 0;
  Scalar confidence = 0;
};

template <typename Scalar>
class ModelHeadT {
 public:
  using Layer = DenseLayer<Scalar>;
  using Vec = VectorX<Scalar>;

  explicit ModelHeadT(std::vector<Layer> layers) : layers_(std::move(layers)) {
    Validate();
  }

  // Single affine layer: logits = W e + b.
  static ModelHeadT Linear(MatrixX<Scalar> weights, Vec bias) {
    return ModelHeadT({Layer{std::move(weights), std::move(bias),
                             Activation::kNone}});
  }

  int input_dim() const { return static_cast<int>(layers_.front().weights.cols()); }
  int num_classes() const { return static_cast<int>(layers_.back().weights.rows()); }
  const std::vector<Layer>& layers() const { return layers_; }

  Vec Logits(const Vec& e) const {
    CheckInput(e);
    Vec x = e;
    for (const Layer& layer : layers_) {
      Vec z = layer.weights * x + layer.bias;
      if (layer.activation == Activation::kRelu) z = z.cwiseMax(Scalar(0));
      x = std::move(z);
    }
    return x;
  }

  Prediction<Scalar> Forward(const Vec& e) const {
    Prediction<Scalar> p;
    p.logits = Logits(e);
    p.probs = Softmax(p.logits);
    p.predicted_class = ArgMax(p.logits);
    p.confidence = p.probs(p.predicted_class);
    return p;
  }

  // Cross-entropy of the head's logits against `label` and its exact gradient
  // with respect to the input embedding. ReLU'(0) is taken as 0.
  LossAndGrad<Scalar> GradWrtInput(const Vec& e, int label) const {
    std::vector<Vec> pre;
    const Vec logits = ForwardCached(e, &pre);
    LossAndGrad<Scalar> ce = CrossEntropy(logits, label);
    return {ce.loss, Backward(pre, std::move(ce.grad))};
  }

  // Gradient of logit[cls] with respect to the input embedding.
  Vec LogitGrad(const Vec& e, int cls) const {
    if (cls < 0 || cls >= num_classes()) {
      Fail(ErrorKind::kIndex, "logit grad: class " + std::to_string(cls) +
                                  " out of range");
    }
    std::vector<Vec> pre;
    ForwardCached(e, &pre);
    Vec upstream = Vec::Zero(num_classes());
    upstream(cls) = Scalar(1);
    return Backward(pre, std::move(upstream));
  }

 private:
  void Validate() const {
    if (layers_.empty()) Fail(ErrorKind::kInvalidInput, "head has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      const std::string where = "head layer " + std::to_string(i);
      RequireFinite(l.weights, where + " weights");
      RequireFinite(l.bias, where + " bias");
      if (l.bias.size() != l.weights.rows()) {
        Fail(ErrorKind::kInvalidInput, where + ": bias size != rows");
      }
      if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
        Fail(ErrorKind::kInvalidInput, where + ": input dim does not chain");
      }
    }
    if (layers_.back().activation != Activation::kNone) {
      Fail(ErrorKind::kInvalidInput, "final head layer must emit raw logits");
    }
  }

  void CheckInput(const Vec& e) const {
    if (e.size() != input_dim()) {
      Fail(ErrorKind::kInvalidInput,
           "embedding dim " + std::to_string(e.size()) + " != head input dim " +
               std::to_string(input_dim()));
    }
    RequireFinite(e, "embedding");
  }

  // Returns logits and records each layer's pre-activation in `pre`.
  Vec ForwardCached(const Vec& e, std::vector<Vec>* pre) const {
    CheckInput(e);
    pre->clear();
    pre->reserve(layers_.size());
    Vec x = e;
    for (const Layer& layer : layers_) {
      Vec z = layer.weights * x + layer.bias;
      pre->push_back(z);
      if (layer.activation == Activation::kRelu) z = z.cwiseMax(Scalar(0));
      x = std::move(z);
    }
    return x;
  }

  Vec Backward(const std::vector<Vec>& pre, Vec upstream) const {
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Layer& layer = layers_[i];
      if (layer.activation == Activation::kRelu) {
        upstream = (pre[i].array() > Scalar(0)).select(upstream, Scalar(0));
      }
      upstream = layer.weights.transpose() * upstream;
    }
    return upstream;
  }

  std::vector<Layer> layers_;
};

using ModelHead = ModelHeadT<double>;

}  // namespace cce

#endif  // CCE_MODEL_HEAD_H_
