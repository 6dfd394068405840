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

#include <cstring>

#include "l2g/feature_store.hpp"
#include "test_util.hpp"

namespace l2g {
namespace {

using testing::error_of;
using testing::TempDir;

// Hand-rolled little-endian L2GF/L2GG writer, independent of io::Writer.
class Bytes {
 public:
  Bytes& text(const std::string& s) {
    data_ += s;
    return *this;
  }
  Bytes& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) data_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  Bytes& f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    return u32(bits);
  }
  Bytes& record(const std::string& id, const std::vector<std::vector<float>>& rows) {
    u32(static_cast<std::uint32_t>(id.size())).text(id).u32(static_cast<std::uint32_t>(rows.size()));
    for (const auto& row : rows) {
      for (float v : row) f32(v);
    }
    return *this;
  }
  const std::string& str() const { return data_; }

 private:
  std::string data_;
};

Bytes header(const std::string& magic, std::uint32_t count, std::uint32_t dim, std::uint32_t version = 1) {
  Bytes b;
  b.text(magic).u32(version).u32(count).u32(dim);
  return b;
}

FeatureCollection load_bytes(const TempDir& dir, const std::string& bytes, LoadOptions options = {}) {
  const auto path = dir.file("in.l2gf");
  testing::write_bytes(path, bytes);
  return load_collection(path, options);
}

TEST(FeatureStore, SingleImageSingleDescriptor) {
  TempDir dir;
  auto b = header("L2GF", 1, 4);
  b.record("a", {{1, 0, 0, 0}});
  const auto c = load_bytes(dir, b.str());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.dim(), 4u);
  EXPECT_EQ(c[0].image_id, "a");
  EXPECT_EQ(c[0].descriptors(0, 0), 1.0f);
}

TEST(FeatureStore, SlightlyOffNormIsRenormalized) {
  TempDir dir;
  auto b = header("L2GF", 1, 4);
  b.record("a", {{1.005f, 0, 0, 0}, {0.6f * 1.005f, 0.8f * 1.005f, 0, 0}});
  const auto c = load_bytes(dir, b.str());
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(c[0].descriptors.row(static_cast<Eigen::Index>(r)).cast<double>().norm(), 1.0, 1e-6);
  }
  EXPECT_NEAR(c[0].descriptors(1, 0), 0.6, 1e-6);
}

TEST(FeatureStore, NearUnitNormIsKeptBitExact) {
  TempDir dir;
  const float x = 1.00005f;
  auto b = header("L2GF", 1, 2);
  b.record("a", {{x, 0}});
  EXPECT_EQ(load_bytes(dir, b.str())[0].descriptors(0, 0), x);
}

TEST(FeatureStore, FarOffNormIsRejected) {
  TempDir dir;
  auto b = header("L2GF", 1, 2);
  b.record("a", {{1.02f, 0}});
  EXPECT_EQ(error_of([&] { load_bytes(dir, b.str()); }), ErrorCode::kUnnormalizedDescriptor);
  auto z = header("L2GF", 1, 2);
  z.record("a", {{0, 0}});
  EXPECT_EQ(error_of([&] { load_bytes(dir, z.str()); }), ErrorCode::kZeroNormDescriptor);
}

TEST(FeatureStore, DuplicateIdIsRejected) {
  TempDir dir;
  auto b = header("L2GF", 2, 2);
  b.record("a", {{1, 0}}).record("a", {{0, 1}});
  EXPECT_EQ(error_of([&] { load_bytes(dir, b.str()); }), ErrorCode::kDuplicateId);
}

TEST(FeatureStore, EmptyDescriptorSetIsRejected) {
  TempDir dir;
  auto b = header("L2GF", 1, 2);
  b.record("a", {});
  EXPECT_EQ(error_of([&] { load_bytes(dir, b.str()); }), ErrorCode::kEmptyDescriptorSet);
  FeatureCollection c;
  EXPECT_EQ(error_of([&] { c.add({"e", DescriptorMatrix(0, 4)}); }), ErrorCode::kEmptyDescriptorSet);
  EXPECT_TRUE(c.empty());
}

TEST(FeatureStore, HeaderErrors) {
  TempDir dir;
  auto bad_magic = header("L2GX", 0, 2);
  EXPECT_EQ(error_of([&] { load_bytes(dir, bad_magic.str()); }), ErrorCode::kBadMagic);
  auto bad_version = header("L2GF", 0, 2, 2);
  EXPECT_EQ(error_of([&] { load_bytes(dir, bad_version.str()); }), ErrorCode::kVersionUnsupported);
  auto truncated = header("L2GF", 1, 4);
  truncated.record("a", {{1, 0, 0, 0}});
  const std::string cut = truncated.str().substr(0, truncated.str().size() - 3);
  EXPECT_EQ(error_of([&] { load_bytes(dir, cut); }), ErrorCode::kTruncatedFile);
  EXPECT_EQ(error_of([&] { load_collection(dir.file("missing.l2gf")); }), ErrorCode::kIoFailure);
}

TEST(FeatureStore, MixedDimensionsAreRejected) {
  Rng rng(1);
  FeatureCollection c;
  c.add(testing::random_set(rng, "a", 3, 8));
  EXPECT_EQ(error_of([&] { c.add(testing::random_set(rng, "b", 3, 9)); }), ErrorCode::kDimensionMismatch);
}

TEST(FeatureStore, DescriptorCapAppliesAtLoad) {
  TempDir dir;
  Rng rng(2);
  FeatureCollection big;
  big.add(testing::random_set(rng, "big", 700, 4));
  save_collection(big, dir.file("big.l2gf"));
  EXPECT_EQ(load_collection(dir.file("big.l2gf"))[0].size(), 600u);
  EXPECT_EQ(load_collection(dir.file("big.l2gf"), LoadOptions{0})[0].size(), 700u);
  EXPECT_EQ(load_collection(dir.file("big.l2gf"), LoadOptions{5})[0].size(), 5u);
}

TEST(FeatureStore, RoundTripIsByteIdentical) {
  TempDir dir;
  const auto original = testing::random_collection(3, 10, 16);
  save_collection(original, dir.file("a.l2gf"));
  const auto loaded = load_collection(dir.file("a.l2gf"), LoadOptions{0});
  ASSERT_EQ(loaded.size(), original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    EXPECT_EQ(loaded[i].image_id, original[i].image_id);
    ASSERT_EQ(loaded[i].descriptors.size(), original[i].descriptors.size());
    EXPECT_EQ(std::memcmp(loaded[i].descriptors.data(), original[i].descriptors.data(),
                          sizeof(float) * static_cast<std::size_t>(original[i].descriptors.size())),
              0);
  }
  save_collection(loaded, dir.file("b.l2gf"));
  EXPECT_EQ(testing::read_bytes(dir.file("a.l2gf")), testing::read_bytes(dir.file("b.l2gf")));
}

TEST(FeatureStore, IterationFollowsFileOrder) {
  TempDir dir;
  auto b = header("L2GF", 3, 2);
  b.record("z", {{1, 0}}).record("a", {{0, 1}}).record("m", {{1, 0}});
  const auto c = load_bytes(dir, b.str());
  std::vector<std::string> ids;
  for (const auto& set : c) ids.push_back(set.image_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"z", "a", "m"}));
  EXPECT_EQ(c.ordinal_of("a"), 1u);
  EXPECT_EQ(error_of([&] { c.ordinal_of("nope"); }), ErrorCode::kUnknownId);
}

TEST(FeatureStore, UnwritablePathIsIoFailure) {
  TempDir dir;
  const auto c = testing::random_collection(4, 2, 4);
  EXPECT_EQ(error_of([&] { save_collection(c, dir.file("no/such/dir/x.l2gf")); }), ErrorCode::kIoFailure);
}

TEST(GlobalStore, RoundTripAndAlignment) {
  TempDir dir;
  Rng rng(5);
  std::vector<GlobalFeature> features;
  for (const char* id : {"q", "b", "a"}) {
    features.push_back({id, testing::random_unit_rows(rng, 1, 6).row(0).transpose()});
  }
  const GlobalFeatureStore store(features);
  save_globals(store, dir.file("g.l2gg"));
  const auto loaded = load_globals(dir.file("g.l2gg"));
  EXPECT_EQ(loaded.ids(), store.ids());
  EXPECT_EQ(loaded.vectors(), store.vectors());

  FeatureCollection db;
  db.add(testing::random_set(rng, "a", 2, 4));
  db.add(testing::random_set(rng, "b", 2, 4));
  const auto aligned = loaded.aligned_to(db);
  EXPECT_EQ(aligned.row(0), store.vectors().row(2));
  EXPECT_EQ(aligned.row(1), store.vectors().row(1));
  db.add(testing::random_set(rng, "c", 2, 4));
  EXPECT_EQ(error_of([&] { loaded.aligned_to(db); }), ErrorCode::kMissingGlobals);
}

TEST(GlobalStore, RecordsMustHoldOneVector) {
  TempDir dir;
  auto b = header("L2GG", 1, 2);
  b.record("a", {{1, 0}, {0, 1}});
  testing::write_bytes(dir.file("g.l2gg"), b.str());
  EXPECT_EQ(error_of([&] { load_globals(dir.file("g.l2gg")); }), ErrorCode::kDimensionMismatch);
}

TEST(Manifest, ResolvesRelativePaths) {
  TempDir dir;
  save_manifest({{"database", {"db.l2gf"}}, {"distractors", "d.l2gf"}, {"queries", {"q.l2gf"}},
                 {"ground_truth", "gt.json"}},
                dir.file("manifest.json"));
  const auto m = load_manifest(dir.file("manifest.json"));
  ASSERT_EQ(m.database.size(), 1u);
  EXPECT_EQ(m.database[0], dir.file("db.l2gf"));
  EXPECT_EQ(m.distractors[0], dir.file("d.l2gf"));
  EXPECT_EQ(m.ground_truth, dir.file("gt.json"));

  const auto db = testing::random_collection(6, 3, 4, "db_");
  const auto d = testing::random_collection(7, 2, 4, "d_");
  save_collection(db, dir.file("db.l2gf"));
  save_collection(d, dir.file("d.l2gf"));
  const auto all = load_database(m);
  ASSERT_EQ(all.size(), 5u);
  EXPECT_EQ(all[3].image_id, "d_0");
}

TEST(Manifest, SchemaErrors) {
  TempDir dir;
  testing::write_bytes(dir.file("a.json"), "{\"queries\": [\"q\"]}");
  EXPECT_EQ(error_of([&] { load_manifest(dir.file("a.json")); }), ErrorCode::kSchemaViolation);
  testing::write_bytes(dir.file("b.json"), "{not json");
  EXPECT_EQ(error_of([&] { load_manifest(dir.file("b.json")); }), ErrorCode::kSchemaViolation);
  testing::write_bytes(dir.file("c.json"), "{\"database\": 3}");
  EXPECT_EQ(error_of([&] { load_manifest(dir.file("c.json")); }), ErrorCode::kSchemaViolation);
}

}  // namespace
}  // namespace l2g
