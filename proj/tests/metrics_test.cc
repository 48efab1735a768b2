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

#include <gtest/gtest.h>

#include <span>

#include "cce/errors.h"
#include "cce/rng.h"
#include "oracles.h"

namespace cce {
namespace {

Ranking Names(int n) {
  Ranking r;
  for (int i = 0; i < n; ++i) r.push_back("c" + std::to_string(i));
  return r;
}

TEST(MetricsTest, RankStatsOfSmallSet) {
  const RankStats s = ComputeRankStats(std::vector<int>{1, 1, 2, 3});
  EXPECT_DOUBLE_EQ(s.median, 1.5);
  EXPECT_DOUBLE_EQ(s.q1, 1.0);
  EXPECT_DOUBLE_EQ(s.q3, 2.25);
}

TEST(MetricsTest, QuantileMatchesDirectFormula) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(30));
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(rng.Normal());
    const double p = rng.Uniform();
    EXPECT_NEAR(Quantile(v, p), oracle::Quantile7(v, p), 1e-12);
  }
}

TEST(MetricsTest, RankingsAndRanksAgree) {
  Rng rng(2);
  std::vector<Ranking> rankings;
  std::vector<int> ranks;
  for (int i = 0; i < 50; ++i) {
    Ranking r = Names(20);
    rng.Shuffle(std::span<std::string>(r));
    ranks.push_back(RankOf(r, "c7"));
    rankings.push_back(std::move(r));
  }
  for (int k = 1; k <= 20; ++k) {
    EXPECT_EQ(PrecisionAtK(rankings, "c7", k), PrecisionAtK(ranks, k));
  }
  const RankStats a = ComputeRankStats(rankings, "c7");
  const RankStats b = ComputeRankStats(ranks);
  EXPECT_EQ(a.median, b.median);
  EXPECT_EQ(a.q1, b.q1);
  EXPECT_EQ(a.q3, b.q3);
}

TEST(MetricsTest, RandomRankingsHitChanceLevel) {
  Rng rng(3);
  std::vector<int> ranks;
  for (int i = 0; i < 10000; ++i) {
    Ranking r = Names(150);
    rng.Shuffle(std::span<std::string>(r));
    ranks.push_back(RankOf(r, "c42"));
  }
  EXPECT_NEAR(PrecisionAtK(ranks, 3), 0.02, 0.01);
}

TEST(MetricsTest, FullDepthIsOne) {
  Rng rng(4);
  std::vector<Ranking> rankings;
  for (int i = 0; i < 10; ++i) {
    Ranking r = Names(12);
    rng.Shuffle(std::span<std::string>(r));
    rankings.push_back(std::move(r));
  }
  EXPECT_EQ(PrecisionAtK(rankings, "c3", 12), 1.0);
}

TEST(MetricsTest, PrecisionIsMonotoneInK) {
  Rng rng(5);
  std::vector<int> ranks;
  for (int i = 0; i < 40; ++i) ranks.push_back(1 + static_cast<int>(rng.UniformInt(30)));
  double previous = 0.0;
  for (int k = 1; k <= 30; ++k) {
    const double p = PrecisionAtK(ranks, k);
    EXPECT_GE(p, previous);
    previous = p;
  }
}

TEST(MetricsTest, MissingTargetIsInvalidTarget) {
  try {
    RankOf(Names(5), "absent");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidTarget);
  }
  EXPECT_THROW(PrecisionAtK({Names(5)}, "absent", 3), Error);
}

TEST(MetricsTest, InvalidArguments) {
  EXPECT_THROW(PrecisionAtK(std::vector<int>{1}, 0), Error);
  EXPECT_THROW(PrecisionAtK(std::vector<int>{}, 3), Error);
  EXPECT_THROW(Quantile({}, 0.5), Error);
  EXPECT_THROW(Quantile({1.0}, 1.5), Error);
}

}  // namespace
}  // namespace cce
