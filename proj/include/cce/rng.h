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

#ifndef CCE_RNG_H_
#define CCE_RNG_H_

#include <cstdint>
#include <span>
#include <vector>

#include "cce/numerics.h"

namespace cce {

// Counter-based generator: the i-th draw is a SplitMix64 finalizer applied to
// (key, i). Identical seeds give identical streams on every platform, and
// independent sub-streams are cheap to derive without sharing state.
//
// Not thread-safe; one Rng per thread of work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  // Sub-stream keyed by (this seed, stream). Does not advance this generator.
  Rng Derive(std::uint64_t stream) const;

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t UniformInt(std::uint64_t n);
  bool Bernoulli(double p);
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double Normal();

  Vector NormalVector(Eigen::Index dim, double sigma = 1.0);
  // Uniformly distributed direction on the unit sphere.
  Vector UnitVector(Eigen::Index dim);

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<int> Permutation(int n);

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t Mix64(std::uint64_t x);

}  // namespace cce

#endif  // CCE_RNG_H_
