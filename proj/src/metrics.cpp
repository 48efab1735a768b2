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

#include "cce/metrics.h"

#include <algorithm>
#include <cmath>

#include "cce/errors.h"

namespace cce {

int RankOf(const Ranking& ranking, const std::string& target) {
  const auto it = std::find(ranking.begin(), ranking.end(), target);
  if (it == ranking.end()) {
    Fail(ErrorKind::kInvalidTarget,
         "target concept '" + target + "' is not in the ranking");
  }
  return static_cast<int>(it - ranking.begin()) + 1;
}

double PrecisionAtK(const std::vector<int>& ranks, int k) {
  if (k < 1) Fail(ErrorKind::kInvalidInput, "precision@K needs K >= 1");
  if (ranks.empty()) Fail(ErrorKind::kInvalidInput, "no rankings");
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](int r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double PrecisionAtK(const std::vector<Ranking>& rankings,
                    const std::string& target, int k) {
  if (rankings.empty()) Fail(ErrorKind::kInvalidInput, "no rankings");
  std::vector<int> ranks;
  ranks.reserve(rankings.size());
  for (const Ranking& r : rankings) ranks.push_back(RankOf(r, target));
  return PrecisionAtK(ranks, k);
}

double Quantile(std::vector<double> values, double p) {
  if (values.empty()) Fail(ErrorKind::kInvalidInput, "quantile of nothing");
  if (!(p >= 0.0 && p <= 1.0)) {
    Fail(ErrorKind::kInvalidInput, "quantile p outside [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RankStats ComputeRankStats(const std::vector<int>& ranks) {
  if (ranks.empty()) Fail(ErrorKind::kInvalidInput, "no rankings");
  const std::vector<double> v(ranks.begin(), ranks.end());
  return {Quantile(v, 0.5), Quantile(v, 0.25), Quantile(v, 0.75)};
}

RankStats ComputeRankStats(const std::vector<Ranking>& rankings,
                           const std::string& target) {
  if (rankings.empty()) Fail(ErrorKind::kInvalidInput, "no rankings");
  std::vector<int> ranks;
  ranks.reserve(rankings.size());
  for (const Ranking& r : rankings) ranks.push_back(RankOf(r, target));
  return ComputeRankStats(ranks);
}

}  // namespace cce
