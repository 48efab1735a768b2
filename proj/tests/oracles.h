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

// Independent reference implementations used only by tests. Nothing here calls
// into the library's numeric code: heads are evaluated with explicit loops
// over std::vector, so an agreement between these and the library is a real
// cross-check.

#ifndef CCE_TESTS_ORACLES_H_
#define CCE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

struct Layer {
  std::vector<Vec> w;  // w[out][in]
  Vec b;
  bool relu = false;
};

inline Vec Logits(const std::vector<Layer>& layers, const Vec& e) {
  Vec x = e;
  for (const Layer& l : layers) {
    Vec z(l.w.size());
    for (std::size_t o = 0; o < l.w.size(); ++o) {
      double acc = l.b[o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += l.w[o][i] * x[i];
      z[o] = l.relu && acc < 0.0 ? 0.0 : acc;
    }
    x = z;
  }
  return x;
}

inline Vec Softmax(const Vec& z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// log(1 + sum_{k != y} exp(z_k - z_y)) when the label leads, which keeps full
// relative precision as the loss approaches zero; log-sum-exp otherwise.
inline double CrossEntropy(const Vec& z, int label) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double rest = 0.0;
  if (z[label] == mx) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (static_cast<int>(k) != label) rest += std::exp(z[k] - z[label]);
    }
    return std::log1p(rest);
  }
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum) - z[label];
}

inline Vec CentralDiff(const std::function<double(const Vec&)>& f, Vec x,
                       double h) {
  Vec g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double x0 = x[j];
    x[j] = x0 + h;
    const double up = f(x);
    x[j] = x0 - h;
    const double down = f(x);
    x[j] = x0;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

// CE(label, head(e + sum_i w_i c_i)).
inline double ShiftedLoss(const std::vector<Layer>& head, const Vec& e,
                          const std::vector<Vec>& concepts, const Vec& w,
                          int label) {
  Vec x = e;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += w[i] * concepts[i][d];
  }
  return CrossEntropy(Logits(head, x), label);
}

struct GridResult {
  double loss = std::numeric_limits<double>::infinity();
  Vec w;
};

// Exhaustive search over the box [lo, hi] (1 or 2 concepts) on a grid of
// spacing `step`, always including both box edges.
inline GridResult GridSearch(const std::vector<Layer>& head, const Vec& e,
                             const std::vector<Vec>& concepts, int label,
                             const Vec& lo, const Vec& hi, double step) {
  auto axis = [step](double a, double b) {
    Vec pts;
    const long n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) pts.push_back(a + step * i);
    if (pts.back() < b) pts.push_back(b);
    return pts;
  };
  GridResult best;
  const Vec a0 = axis(lo[0], hi[0]);
  if (concepts.size() == 1) {
    for (double w0 : a0) {
      const double l = ShiftedLoss(head, e, concepts, {w0}, label);
      if (l < best.loss) best = {l, {w0}};
    }
    return best;
  }
  const Vec a1 = axis(lo[1], hi[1]);
  for (double w0 : a0) {
    for (double w1 : a1) {
      const double l = ShiftedLoss(head, e, concepts, {w0, w1}, label);
      if (l < best.loss) best = {l, {w0, w1}};
    }
  }
  return best;
}

// Type-7 quantile by direct formula on a sorted copy.
inline double Quantile7(Vec v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - i) * (v[i + 1] - v[i]);
}

}  // namespace oracle

#endif  // CCE_TESTS_ORACLES_H_
