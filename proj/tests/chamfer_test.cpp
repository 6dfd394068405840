// Copyright 2026 The L2G Retrieval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "l2g/chamfer.hpp"
#include "test_util.hpp"

namespace l2g {
namespace {

using testing::chamfer_oracle;
using testing::error_of;
using testing::random_set;

TEST(Chamfer, IdenticalSetsScoreOne) {
  Rng rng(1);
  const auto q = random_set(rng, "q", 9, 32);
  EXPECT_NEAR(chamfer_similarity(q, q), 1.0, 1e-6);
  EXPECT_NEAR(chamfer_dissimilarity(q, q, {1.0}), 0.0, 1e-6);
}

TEST(Chamfer, ExactSelfMatchIsZeroForEveryPower) {
  // One-hot rows make every self inner product exactly 1.
  LocalFeatureSet q{"q", DescriptorMatrix::Identity(4, 6)};
  for (double p : {0.001, 0.01, 0.3, 1.0, 7.0}) EXPECT_EQ(chamfer_dissimilarity(q, q, {p}), 0.0);
}

TEST(Chamfer, OrthogonalSetsScoreZero) {
  DescriptorMatrix a = DescriptorMatrix::Zero(2, 4);
  DescriptorMatrix b = DescriptorMatrix::Zero(2, 4);
  a(0, 0) = 1;
  a(1, 1) = 1;
  b(0, 2) = 1;
  b(1, 3) = -1;
  EXPECT_EQ(chamfer_similarity({"a", a}, {"b", b}), 0.0);
  EXPECT_EQ(chamfer_dissimilarity({"a", a}, {"b", b}, {0.01}), 1.0);
}

TEST(Chamfer, NegativeProductsClampToZero) {
  DescriptorMatrix a(1, 2);
  a << 1, 0;
  DescriptorMatrix b(1, 2);
  b << -1, 0;
  EXPECT_EQ(chamfer_similarity({"a", a}, {"b", b}), 0.0);
}

TEST(Chamfer, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = random_set(rng, "q", 5, 8);
    const auto x = random_set(rng, "x", 7, 8);
    EXPECT_NEAR(chamfer_similarity(q, x), chamfer_oracle(q, x), 1e-6);
  }
}

TEST(Chamfer, DissimilarityEndpointsAndScalar) {
  for (double p : {0.01, 0.5, 2.0}) {
    EXPECT_EQ(similarity_to_dissimilarity(1.0, p), 0.0);
    EXPECT_EQ(similarity_to_dissimilarity(0.0, p), 1.0);
  }
  const double d = similarity_to_dissimilarity(0.75, 0.01);
  EXPECT_NEAR(d, std::exp(0.01 * std::log(0.25)), 1e-15);
  EXPECT_NEAR(d, 0.98623, 5e-6);
}

TEST(Chamfer, DissimilarityIsStrictlyDecreasing) {
  for (double p : {0.01, 0.2, 1.0, 4.0}) {
    double previous = 2.0;
    for (int i = 0; i <= 100; ++i) {
      const double d = similarity_to_dissimilarity(i / 100.0, p);
      EXPECT_LT(d, previous);
      previous = d;
    }
  }
}

TEST(Chamfer, RankingByDissimilarityEqualsRankingBySimilarity) {
  Rng rng(3);
  const auto q = random_set(rng, "q", 6, 16);
  std::vector<LocalFeatureSet> db;
  for (int i = 0; i < 40; ++i) db.push_back(random_set(rng, "x", 1 + rng.below(8), 16));
  std::vector<std::size_t> by_sim(db.size());
  std::iota(by_sim.begin(), by_sim.end(), std::size_t{0});
  auto by_dis = by_sim;
  std::stable_sort(by_sim.begin(), by_sim.end(), [&](std::size_t a, std::size_t b) {
    return chamfer_similarity(q, db[a]) > chamfer_similarity(q, db[b]);
  });
  for (double p : {0.01, 1.0, 3.0}) {
    auto order = by_dis;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return chamfer_dissimilarity(q, db[a], {p}) < chamfer_dissimilarity(q, db[b], {p});
    });
    EXPECT_EQ(order, by_sim) << "power " << p;
  }
}

TEST(Chamfer, IsAsymmetric) {
  Rng rng(4);
  const auto q = random_set(rng, "q", 3, 16);
  LocalFeatureSet x{"x", DescriptorMatrix(8, 16)};
  x.descriptors.topRows(3) = q.descriptors;
  x.descriptors.bottomRows(5) = testing::random_unit_rows(rng, 5, 16);
  EXPECT_NEAR(chamfer_similarity(q, x), 1.0, 1e-6);
  EXPECT_LT(chamfer_similarity(x, q), 0.9);
}

TEST(Chamfer, InputErrors) {
  Rng rng(5);
  const auto a = random_set(rng, "a", 2, 8);
  const auto b = random_set(rng, "b", 2, 9);
  EXPECT_EQ(error_of([&] { chamfer_similarity(a, b); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(error_of([&] { chamfer_dissimilarity(a, a, {0.0}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] { chamfer_dissimilarity(a, a, {-1.0}); }), ErrorCode::kInvalidArgument);
}

TEST(Chamfer, DotKernelMatchesDoubleProduct) {
  Rng rng(6);
  for (std::size_t dim : {2u, 7u, 8u, 9u, 64u, 131u}) {
    const auto rows = testing::random_unit_rows(rng, 2, dim);
    const double expected = rows.row(0).cast<double>().dot(rows.row(1).cast<double>());
    EXPECT_NEAR(dot(rows.row(0).data(), rows.row(1).data(), dim), expected, 1e-6);
  }
}

}  // namespace
}  // namespace l2g
