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

#pragma once

// Seeded synthetic data.
//
// Partial-match benchmark: every query depicts one landmark, described by a
// pool of "part" descriptors. A relevant database image shows a few of the
// query's parts (the shared overlap), some other parts of the same landmark
// that the query does not see, and clutter. Background images draw most of
// their descriptors from one "topic" of common words; the query also shows a
// few words of one topic, so the background images of that topic collide
// with it locally and resemble each other. Global features are the mean
// descriptor plus heavy noise.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2g/common.hpp"
#include "l2g/eval.hpp"
#include "l2g/feature_store.hpp"
#include "l2g/mds.hpp"

namespace l2g {

struct EuclideanInstance {
  Eigen::MatrixXd points;  // n x dim, uniform in [0, 1]^dim
  DissimilarityMatrix matrix;
  double scale = 1.0;  // matrix = distances / scale
};

// Uniform points and their pairwise distances divided by the largest one.
inline EuclideanInstance generate_euclidean_instance(std::uint64_t seed, std::size_t n, std::size_t dim) {
  require(n >= 2 && dim >= 1, ErrorCode::kInvalidArgument, "need n >= 2 and dim >= 1");
  Rng rng(seed);
  EuclideanInstance out;
  out.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < out.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.points.cols(); ++j) out.points(i, j) = rng.uniform();
  }
  Eigen::MatrixXd dist = pairwise_distances(out.points);
  out.scale = dist.maxCoeff();
  if (out.scale > 0.0) dist /= out.scale;
  out.matrix = DissimilarityMatrix::from_dense(dist);
  return out;
}

struct PartialMatchConfig {
  std::size_t dim = 64;
  std::size_t descriptors_per_image = 16;
  double noise = 0.02;  // per-component sigma before renormalizing
  std::size_t query_parts = 12;
  std::size_t query_common = 4;
  std::size_t landmark_parts = 24;  // pool per landmark, query parts included
  double landmark_spread = 4.0;     // part = normalize(center + spread * random unit)
  // Query parts shown by each relevant image, cycled over positives.
  std::vector<std::size_t> overlaps = {4, 2, 3};
  std::size_t other_parts = 6;  // landmark parts the query does not see
  std::size_t positive_common = 3;
  std::size_t positives_per_query = 24;
  std::size_t junk_per_query = 2;
  std::size_t junk_overlap = 1;
  std::size_t topics = 100;
  std::size_t words_per_topic = 8;
  std::size_t background_common = 6;  // words of its topic per background image
  double global_noise = 0.6;  // norm of the noise added to the unit mean
  // Positives whose overlap fraction is below this are labeled hard.
  double hard_threshold = 0.2;
};

struct PartialMatchBenchmark {
  FeatureCollection database;  // relevant + background first, then distractors
  FeatureCollection queries;
  GlobalFeatureStore database_globals;
  GlobalFeatureStore query_globals;
  GroundTruth ground_truth;
  std::size_t n_db = 0;
  std::size_t n_distractors = 0;
};

namespace detail {

class PartialMatchGenerator {
 public:
  PartialMatchGenerator(const PartialMatchConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {
    for (std::size_t i = 0; i < config_.topics * config_.words_per_topic; ++i) common_.push_back(random_unit());
  }

  Eigen::VectorXd random_unit() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(config_.dim));
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng_.normal();
    } while (v.norm() == 0.0);
    return v.normalized();
  }

  std::vector<Eigen::VectorXd> landmark() {
    const Eigen::VectorXd center = random_unit();
    std::vector<Eigen::VectorXd> parts;
    for (std::size_t i = 0; i < config_.landmark_parts; ++i) {
      parts.push_back((center + config_.landmark_spread * random_unit()).normalized());
    }
    return parts;
  }

  // Noisy unit copy of `v`.
  Eigen::VectorXd observe(const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += config_.noise * rng_.normal();
    return out.normalized();
  }

  // `count` distinct indices from [0, bound).
  std::vector<std::size_t> pick(std::size_t bound, std::size_t count) {
    std::vector<std::size_t> all(bound);
    for (std::size_t i = 0; i < bound; ++i) all[i] = i;
    for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng_.below(bound - i)]);
    all.resize(count);
    return all;
  }

  std::vector<std::size_t> pick_common(std::size_t count) { return pick(common_.size(), std::min(count, common_.size())); }

  // `count` distinct words of one random topic.
  std::vector<std::size_t> pick_topic(std::size_t count) {
    const std::size_t base = rng_.below(config_.topics) * config_.words_per_topic;
    auto words = pick(config_.words_per_topic, std::min(count, config_.words_per_topic));
    for (auto& w : words) w += base;
    return words;
  }

  // Observed descriptors for the given clean vectors, padded with unique
  // clutter up to the per-image count.
  LocalFeatureSet image(std::string id, const std::vector<Eigen::VectorXd>& clean) {
    const std::size_t n = config_.descriptors_per_image;
    LocalFeatureSet set;
    set.image_id = std::move(id);
    set.descriptors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config_.dim));
    for (std::size_t r = 0; r < n; ++r) {
      const Eigen::VectorXd v = r < clean.size() ? observe(clean[r]) : random_unit();
      set.descriptors.row(static_cast<Eigen::Index>(r)) = v.transpose().cast<float>();
    }
    return set;
  }

  LocalFeatureSet background(std::string id) {
    std::vector<Eigen::VectorXd> clean;
    for (std::size_t c : pick_topic(config_.background_common)) clean.push_back(common_[c]);
    return image(std::move(id), clean);
  }

  GlobalFeature global(const LocalFeatureSet& set) {
    Eigen::VectorXd mean = set.descriptors.cast<double>().colwise().mean().transpose();
    if (mean.norm() > 0.0) mean.normalize();
    const Eigen::VectorXd noisy = mean + config_.global_noise * random_unit();
    return {set.image_id, (noisy.norm() > 0.0 ? noisy.normalized() : random_unit()).cast<float>()};
  }

  const std::vector<Eigen::VectorXd>& common() const { return common_; }
  Rng& rng() { return rng_; }

 private:
  PartialMatchConfig config_;
  Rng rng_;
  std::vector<Eigen::VectorXd> common_;
};

inline std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
  return buf;
}

}  // namespace detail

inline void validate(const PartialMatchConfig& c) {
  require(c.dim >= 2 && c.descriptors_per_image >= 1, ErrorCode::kInvalidArgument, "bad synthetic dimensions");
  require(c.query_parts + c.query_common <= c.descriptors_per_image, ErrorCode::kInvalidArgument,
          "query descriptors exceed the per-image count");
  require(c.query_parts <= c.landmark_parts, ErrorCode::kInvalidArgument, "query parts exceed the landmark pool");
  require(!c.overlaps.empty(), ErrorCode::kInvalidArgument, "overlap list is empty");
  for (std::size_t m : c.overlaps) {
    require(m >= 1 && m <= c.query_parts, ErrorCode::kInvalidArgument, "overlap outside the query parts");
    require(m + std::min(c.other_parts, c.landmark_parts - c.query_parts) <= c.descriptors_per_image,
            ErrorCode::kInvalidArgument, "relevant image exceeds the per-image count");
  }
  require(c.topics >= 1 && c.words_per_topic >= 1, ErrorCode::kInvalidArgument, "need at least one common word");
  require(c.junk_overlap <= c.query_parts, ErrorCode::kInvalidArgument, "junk overlap outside the query parts");
  require(c.positives_per_query >= 2, ErrorCode::kInvalidArgument, "need an easy and a hard positive per query");
}

// Database ordinals are shuffled so relevant images are not contiguous.
// Needs n_db >= 2 * n_queries (one easy and one hard positive per query).
inline PartialMatchBenchmark generate_partial_match_benchmark(std::uint64_t seed, std::size_t n_db,
                                                              std::size_t n_queries, std::size_t n_distractors,
                                                              const PartialMatchConfig& config = {}) {
  validate(config);
  require(n_db >= 1 && n_queries >= 1 && n_distractors >= 1, ErrorCode::kInvalidArgument, "counts must be >= 1");
  require(n_db >= 2 * n_queries, ErrorCode::kInvalidArgument, "need at least two database images per query");
  detail::PartialMatchGenerator gen(config, seed);

  const std::size_t budget = n_db / n_queries;
  const std::size_t positives = std::min(config.positives_per_query, budget);
  const std::size_t junk = std::min(config.junk_per_query, budget - positives);
  const std::size_t other = std::min(config.other_parts, config.landmark_parts - config.query_parts);
  const auto overlap_fraction = [&](std::size_t m) {
    return static_cast<double>(m) / static_cast<double>(config.descriptors_per_image);
  };

  // Slot order is shuffled; slot s holds the s-th generated database image.
  std::vector<std::size_t> slot(n_db);
  for (std::size_t i = 0; i < n_db; ++i) slot[i] = i;
  gen.rng().shuffle(slot);
  std::vector<LocalFeatureSet> db(n_db);
  std::size_t next = 0;

  PartialMatchBenchmark bench;
  bench.n_db = n_db;
  bench.n_distractors = n_distractors;
  std::vector<GlobalFeature> query_globals;

  for (std::size_t q = 0; q < n_queries; ++q) {
    const auto parts = gen.landmark();
    const auto order = gen.pick(parts.size(), parts.size());
    const std::vector<std::size_t> seen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.query_parts));
    const std::vector<std::size_t> unseen(order.begin() + static_cast<std::ptrdiff_t>(config.query_parts), order.end());

    std::vector<Eigen::VectorXd> clean;
    for (std::size_t p : seen) clean.push_back(parts[p]);
    for (std::size_t c : gen.pick_topic(config.query_common)) clean.push_back(gen.common()[c]);
    LocalFeatureSet query = gen.image(detail::numbered("query_", q), clean);
    query_globals.push_back(gen.global(query));
    bench.ground_truth.query_ids.push_back(query.image_id);
    bench.queries.add(std::move(query));

    QueryGroundTruth gt;
    const auto relevant = [&](std::size_t m) {
      std::vector<Eigen::VectorXd> vecs;
      for (std::size_t i : gen.pick(seen.size(), m)) vecs.push_back(parts[seen[i]]);
      for (std::size_t i : gen.pick(unseen.size(), other)) vecs.push_back(parts[unseen[i]]);
      const std::size_t room = config.descriptors_per_image - vecs.size();
      for (std::size_t c : gen.pick_common(std::min(room, config.positive_common))) vecs.push_back(gen.common()[c]);
      const std::size_t s = slot[next++];
      db[s] = gen.image(detail::numbered("db_", s), vecs);
      return static_cast<std::uint32_t>(s);
    };
    for (std::size_t i = 0; i < positives; ++i) {
      const std::size_t m = config.overlaps[i % config.overlaps.size()];
      const auto ordinal = relevant(m);
      (overlap_fraction(m) < config.hard_threshold ? gt.hard : gt.easy).push_back(ordinal);
    }
    for (std::size_t i = 0; i < junk; ++i) gt.junk.push_back(relevant(config.junk_overlap));
    for (auto* list : {&gt.easy, &gt.hard, &gt.junk}) std::sort(list->begin(), list->end());
    bench.ground_truth.queries.push_back(std::move(gt));
  }
  for (; next < n_db; ++next) db[slot[next]] = gen.background(detail::numbered("db_", slot[next]));

  std::vector<GlobalFeature> db_globals;
  for (auto& set : db) {
    db_globals.push_back(gen.global(set));
    bench.database.add(std::move(set));
  }
  for (std::size_t i = 0; i < n_distractors; ++i) {
    LocalFeatureSet set = gen.background(detail::numbered("distractor_", i));
    db_globals.push_back(gen.global(set));
    bench.database.add(std::move(set));
  }
  bench.database_globals = GlobalFeatureStore(db_globals);
  bench.query_globals = GlobalFeatureStore(query_globals);
  return bench;
}

// Writes db.l2gf, distractors.l2gf, queries.l2gf, db.l2gg, queries.l2gg,
// gt.json and manifest.json into `dir`; returns the manifest path.
inline std::string write_benchmark(const PartialMatchBenchmark& bench, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + dir + ": " + ec.message());
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

  FeatureCollection db;
  FeatureCollection distractors;
  for (std::size_t i = 0; i < bench.database.size(); ++i) {
    (i < bench.n_db ? db : distractors).add(bench.database[i]);
  }
  save_collection(db, path("db.l2gf"));
  save_collection(distractors, path("distractors.l2gf"));
  save_collection(bench.queries, path("queries.l2gf"));
  save_globals(bench.database_globals, path("db.l2gg"));
  save_globals(bench.query_globals, path("queries.l2gg"));
  {
    auto out = io::open_output(path("gt.json"));
    out << ground_truth_to_json(bench.ground_truth, bench.database).dump(2) << '\n';
    if (!out) fail(ErrorCode::kIoFailure, "write to " + path("gt.json") + " failed");
  }
  const nlohmann::json manifest = {{"database", {"db.l2gf"}},
                                   {"distractors", {"distractors.l2gf"}},
                                   {"queries", {"queries.l2gf"}},
                                   {"database_globals", {"db.l2gg"}},
                                   {"query_globals", {"queries.l2gg"}},
                                   {"ground_truth", "gt.json"}};
  save_manifest(manifest, path("manifest.json"));
  return path("manifest.json");
}

}  // namespace l2g
