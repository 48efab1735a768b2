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

// Precision@K and rank statistics of a target concept over a set of rankings.

#ifndef CCE_METRICS_H_
#define CCE_METRICS_H_

#include <string>
#include <vector>

namespace cce {

// A ranking is a list of concept names, best first.
using Ranking = std::vector<std::string>;

// 1-based position of `target`; throws kInvalidTarget if absent.
int RankOf(const Ranking& ranking, const std::string& target);

// Fraction of rankings whose first K entries contain `target`.
double PrecisionAtK(const std::vector<Ranking>& rankings,
                    const std::string& target, int k);
// Same, from precomputed 1-based ranks.
double PrecisionAtK(const std::vector<int>& ranks, int k);

struct RankStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Quantile by linear interpolation between order statistics (type 7).
double Quantile(std::vector<double> values, double p);

RankStats ComputeRankStats(const std::vector<Ranking>& rankings,
                           const std::string& target);
RankStats ComputeRankStats(const std::vector<int>& ranks);

}  // namespace cce

#endif  // CCE_METRICS_H_
