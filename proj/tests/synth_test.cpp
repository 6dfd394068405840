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

#include <set>

#include "l2g/chamfer.hpp"
#include "l2g/eval.hpp"
#include "l2g/local_index.hpp"
#include "l2g/rerank.hpp"
#include "l2g/synth.hpp"
#include "test_util.hpp"

namespace l2g {
namespace {

using testing::error_of;

bool same_collection(const FeatureCollection& a, const FeatureCollection& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].image_id != b[i].image_id || a[i].descriptors != b[i].descriptors) return false;
  }
  return true;
}

TEST(EuclideanInstance, DeterministicAndScaled) {
  const auto a = generate_euclidean_instance(5, 30, 4);
  const auto b = generate_euclidean_instance(5, 30, 4);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.matrix.values(), b.matrix.values());
  EXPECT_NE(generate_euclidean_instance(6, 30, 4).points, a.points);
  EXPECT_EQ(a.matrix.values().maxCoeff(), 1.0);
  EXPECT_NEAR(a.matrix(2, 7) * a.scale, (a.points.row(2) - a.points.row(7)).norm(), 1e-12);
  EXPECT_TRUE(a.matrix.complete());
}

TEST(PartialMatch, DeterministicPerSeed) {
  const auto a = generate_partial_match_benchmark(3, 60, 5, 20);
  const auto b = generate_partial_match_benchmark(3, 60, 5, 20);
  EXPECT_TRUE(same_collection(a.database, b.database));
  EXPECT_TRUE(same_collection(a.queries, b.queries));
  EXPECT_EQ(a.database_globals.vectors(), b.database_globals.vectors());
  EXPECT_EQ(a.query_globals.vectors(), b.query_globals.vectors());
  const auto c = generate_partial_match_benchmark(4, 60, 5, 20);
  EXPECT_FALSE(same_collection(a.database, c.database));
}

TEST(PartialMatch, ShapeAndLabels) {
  const auto bench = generate_partial_match_benchmark(8, 100, 4, 30);
  EXPECT_EQ(bench.database.size(), 130u);
  EXPECT_EQ(bench.queries.size(), 4u);
  EXPECT_EQ(bench.n_db, 100u);
  EXPECT_EQ(bench.ground_truth.size(), 4u);
  EXPECT_EQ(bench.database.dim(), 64u);
  std::set<std::uint32_t> labeled;
  for (const auto& q : bench.ground_truth.queries) {
    EXPECT_NO_THROW(validate(q));
    EXPECT_FALSE(q.easy.empty());
    EXPECT_FALSE(q.hard.empty());
    for (const auto* list : {&q.easy, &q.hard, &q.junk}) {
      for (auto o : *list) {
        EXPECT_LT(o, bench.n_db);  // distractors are never relevant
        EXPECT_TRUE(labeled.insert(o).second) << "image labeled for two queries";
      }
    }
  }
  // Every descriptor is unit length.
  for (const auto& set : bench.database) {
    for (Eigen::Index r = 0; r < set.descriptors.rows(); ++r) {
      EXPECT_NEAR(set.descriptors.row(r).cast<double>().norm(), 1.0, 1e-6);
    }
  }
  EXPECT_NO_THROW(bench.database_globals.aligned_to(bench.database));
  EXPECT_NO_THROW(bench.query_globals.aligned_to(bench.queries));
}

TEST(PartialMatch, EveryQueryHasPositivesUnderBothProtocols) {
  const auto bench = generate_partial_match_benchmark(9, 40, 20, 10);
  for (const auto& q : bench.ground_truth.queries) {
    const std::vector<std::uint32_t> none;
    EXPECT_TRUE(average_precision(none, q, Protocol::kMedium));
    EXPECT_TRUE(average_precision(none, q, Protocol::kHard));
  }
}

TEST(PartialMatch, FullOverlapGivesNearZeroDissimilarity) {
  PartialMatchConfig config;
  config.noise = 0.0;
  config.query_parts = 16;
  config.query_common = 0;
  config.landmark_parts = 16;
  config.overlaps = {16};
  config.other_parts = 0;
  config.positive_common = 0;
  config.junk_per_query = 0;
  const auto bench = generate_partial_match_benchmark(10, 20, 2, 5, config);
  for (std::size_t q = 0; q < 2; ++q) {
    for (auto o : bench.ground_truth.queries[q].easy) {
      EXPECT_LT(chamfer_dissimilarity(bench.queries[q], bench.database[o], {1.0}), 1e-6);
    }
  }
}

TEST(PartialMatch, HardPositivesOverlapLess) {
  const auto bench = generate_partial_match_benchmark(11, 120, 4, 20);
  double easy = 0.0, hard = 0.0;
  std::size_t ne = 0, nh = 0;
  for (std::size_t q = 0; q < 4; ++q) {
    const auto& gt = bench.ground_truth.queries[q];
    for (auto o : gt.easy) easy += chamfer_similarity(bench.queries[q], bench.database[o]), ++ne;
    for (auto o : gt.hard) hard += chamfer_similarity(bench.queries[q], bench.database[o]), ++nh;
  }
  EXPECT_GT(easy / static_cast<double>(ne), hard / static_cast<double>(nh));
}

TEST(PartialMatch, InvalidCounts) {
  EXPECT_EQ(error_of([] { generate_partial_match_benchmark(1, 9, 5, 3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([] { generate_partial_match_benchmark(1, 10, 5, 0); }), ErrorCode::kInvalidArgument);
  PartialMatchConfig config;
  config.overlaps = {};
  EXPECT_EQ(error_of([&] { generate_partial_match_benchmark(1, 10, 5, 3, config); }), ErrorCode::kInvalidArgument);
  config.overlaps = {13};
  EXPECT_EQ(error_of([&] { generate_partial_match_benchmark(1, 10, 5, 3, config); }), ErrorCode::kInvalidArgument);
}

TEST(PartialMatch, WrittenFilesLoadBack) {
  testing::TempDir dir;
  const auto bench = generate_partial_match_benchmark(12, 30, 3, 10);
  const auto manifest_path = write_benchmark(bench, dir.file("bench"));
  const auto manifest = load_manifest(manifest_path);
  const auto db = load_database(manifest);
  EXPECT_TRUE(same_collection(db, bench.database));
  EXPECT_TRUE(same_collection(load_queries(manifest), bench.queries));
  const auto gt = load_ground_truth(manifest.ground_truth, db);
  EXPECT_EQ(gt.query_ids, bench.ground_truth.query_ids);
  for (std::size_t q = 0; q < gt.size(); ++q) {
    EXPECT_EQ(gt.queries[q].easy, bench.ground_truth.queries[q].easy);
    EXPECT_EQ(gt.queries[q].hard, bench.ground_truth.queries[q].hard);
    EXPECT_EQ(gt.queries[q].junk, bench.ground_truth.queries[q].junk);
  }
  EXPECT_EQ(load_global_files(manifest.database_globals).aligned_to(db), bench.database_globals.aligned_to(db));
}

TEST(PartialMatch, LocalMatchingBeatsGlobalRetrieval) {
  const auto bench = generate_partial_match_benchmark(42, 400, 10, 300);
  const auto index = build_index(bench.database);
  const auto db_globals = bench.database_globals.aligned_to(bench.database);
  const auto q_globals = bench.query_globals.aligned_to(bench.queries);
  std::vector<std::vector<std::uint32_t>> local, global;
  for (std::size_t q = 0; q < bench.queries.size(); ++q) {
    local.push_back(query_topk(index, bench.queries[q], index.size()).ordinals());
    global.push_back(global_search(db_globals, q_globals.row(static_cast<Eigen::Index>(q)).transpose()).ordinals());
  }
  for (auto p : {Protocol::kMedium, Protocol::kHard}) {
    EXPECT_GE(mean_ap(local, bench.ground_truth, p), mean_ap(global, bench.ground_truth, p) + 10.0);
  }
}

}  // namespace
}  // namespace l2g
