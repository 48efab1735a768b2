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

// Dense numeric kernels shared by every module: softmax, cross-entropy with
// its logit gradient, and a central finite-difference gradient used as a test
// oracle. Everything is templated on the scalar type; the library itself is
// instantiated with `double`.

#ifndef CCE_NUMERICS_H_
#define CCE_NUMERICS_H_

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "cce/errors.h"

namespace cce {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row-major so the flattened layout matches the on-disk formats.
template <typename Scalar>
using MatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

template <typename Derived>
bool AllFinite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

// Throws kInvalidInput if `x` is empty or holds a NaN/Inf.
template <typename Derived>
void RequireFinite(const Eigen::DenseBase<Derived>& x, const std::string& what) {
  if (x.size() == 0) Fail(ErrorKind::kInvalidInput, what + ": empty");
  if (!x.allFinite()) {
    Fail(ErrorKind::kInvalidInput, what + ": non-finite entry");
  }
}

template <typename Derived>
VectorX<typename Derived::Scalar> Softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  RequireFinite(logits, "softmax logits");
  const Scalar shift = logits.maxCoeff();
  VectorX<Scalar> out = (logits.array() - shift).exp().matrix();
  out /= out.sum();
  return out;
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  VectorX<Scalar> grad;
};

// loss = -log softmax(logits)[label]; grad = softmax(logits) - onehot(label).
// The loss goes through log-sum-exp so confident wrong predictions do not
// overflow to infinity.
template <typename Derived>
LossAndGrad<typename Derived::Scalar> CrossEntropy(
    const Eigen::MatrixBase<Derived>& logits, int label) {
  using Scalar = typename Derived::Scalar;
  if (label < 0 || label >= logits.size()) {
    Fail(ErrorKind::kIndex, "cross_entropy: label " + std::to_string(label) +
                                " out of range [0, " +
                                std::to_string(logits.size()) + ")");
  }
  VectorX<Scalar> probs = Softmax(logits);
  const Scalar shift = logits.maxCoeff();
  const Scalar log_sum =
      shift + std::log((logits.array() - shift).exp().sum());
  LossAndGrad<Scalar> out{log_sum - logits(label), std::move(probs)};
  out.grad(label) -= Scalar(1);
  return out;
}

// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h for every coordinate.
template <typename Scalar, typename Fn>
VectorX<Scalar> FiniteDiffGrad(Fn&& f, const VectorX<Scalar>& x, Scalar h) {
  if (!(h > Scalar(0))) Fail(ErrorKind::kInvalidInput, "finite diff: h <= 0");
  VectorX<Scalar> grad(x.size());
  VectorX<Scalar> probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const Scalar up = f(probe);
    probe(j) = x(j) - h;
    const Scalar down = f(probe);
    probe(j) = x(j);
    grad(j) = (up - down) / (Scalar(2) * h);
  }
  return grad;
}

// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
int ArgMax(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace cce

#endif  // CCE_NUMERICS_H_
