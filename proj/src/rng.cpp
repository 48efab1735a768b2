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

#include "cce/rng.h"

#include <cmath>
#include <numbers>
#include <numeric>

namespace cce {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t Mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), key_(Mix64(seed + kGolden)) {}

Rng Rng::Derive(std::uint64_t stream) const {
  return Rng(Mix64(key_ ^ Mix64(stream + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t Rng::NextU64() {
  ++counter_;
  return Mix64(key_ + counter_ * kGolden);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::UniformInt(std::uint64_t n) {
  if (n == 0) Fail(ErrorKind::kInvalidInput, "UniformInt: n == 0");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = NextU64();
  while (x >= limit) x = NextU64();
  return x % n;
}

bool Rng::Bernoulli(double p) { return Uniform() < p; }

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::NormalVector(Eigen::Index dim, double sigma) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = sigma * Normal();
  return v;
}

Vector Rng::UnitVector(Eigen::Index dim) {
  Vector v = NormalVector(dim);
  double norm = v.norm();
  while (norm == 0.0) {
    v = NormalVector(dim);
    norm = v.norm();
  }
  return v / norm;
}

std::vector<int> Rng::Permutation(int n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), 0);
  Shuffle(std::span<int>(out));
  return out;
}

}  // namespace cce
