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

// Top-k retrieval of database images by Chamfer dissimilarity, and the
// offline table of each database image's nearest neighbors.
//
// Two index modes:
//  - exact: scans every database image.
//  - approximate: spherical k-means codebook over all database descriptors
//    with posting lists. Each query descriptor probes its `probes` nearest
//    centers and keeps the best inner product per image; the accumulated
//    scores select `rescore_factor * k` images that are then scored exactly.
//
// File formats (little-endian):
//   L2GI: "L2GI" | u32 version | u32 mode | embedded L2GF collection |
//         approximate only: u32 probes | u32 rescore_factor |
//         u32 kmeans_iterations | u32 seed_lo | u32 seed_hi | u32 centers |
//         u32 dim | centers*dim f32 | per center: u32 n | n * (u32 image, u32 row)
//   L2GD: "L2GD" | u32 version | u32 image_count | u32 k_nn |
//         per image: k_nn * (u32 ordinal, f32 dissimilarity)
//   L2GS: "L2GS" | (u32 i, u32 j, f32 similarity)* until end of file.
//         Ordinals 0..N-1 are database images, N+q is query q.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "l2g/chamfer.hpp"
#include "l2g/common.hpp"
#include "l2g/feature_store.hpp"

namespace l2g {

enum class IndexMode : std::uint32_t { kExact = 0, kApproximate = 1 };

inline constexpr std::size_t kTargetListLength = 512;

struct ApproxParams {
  std::size_t num_centers = 0;  // 0: about kTargetListLength descriptors per list
  std::size_t probes = 8;
  std::size_t rescore_factor = 4;
  std::size_t kmeans_iterations = 25;
  std::uint64_t seed = 7;
};

struct RankedEntry {
  std::uint32_t ordinal;
  double score;

  bool operator==(const RankedEntry&) const = default;
};

enum class ScoreOrder { kAscending, kDescending };

// Candidate list; ties on score are always broken by ascending ordinal.
struct RankedList {
  std::vector<RankedEntry> items;
  ScoreOrder order = ScoreOrder::kAscending;

  std::size_t size() const { return items.size(); }
  std::vector<std::uint32_t> ordinals() const {
    std::vector<std::uint32_t> out;
    out.reserve(items.size());
    for (const auto& e : items) out.push_back(e.ordinal);
    return out;
  }
};

inline bool ascending_before(const RankedEntry& a, const RankedEntry& b) {
  if (a.score != b.score) return a.score < b.score;
  return a.ordinal < b.ordinal;
}

inline bool descending_before(const RankedEntry& a, const RankedEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.ordinal < b.ordinal;
}

// Keeps the best `k` entries in order.
inline void select_top(std::vector<RankedEntry>& entries, std::size_t k, ScoreOrder order) {
  const auto cmp = order == ScoreOrder::kAscending ? ascending_before : descending_before;
  k = std::min(k, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k),
                    entries.end(), cmp);
  entries.resize(k);
}

struct Posting {
  std::uint32_t image;
  std::uint32_t row;

  bool operator==(const Posting&) const = default;
};

class LocalIndex {
 public:
  LocalIndex(std::shared_ptr<const FeatureCollection> db, IndexMode mode, ApproxParams params,
             DescriptorMatrix codebook, std::vector<std::vector<Posting>> postings)
      : db_(std::move(db)),
        mode_(mode),
        params_(params),
        codebook_(std::move(codebook)),
        postings_(std::move(postings)) {}

  const FeatureCollection& database() const { return *db_; }
  std::shared_ptr<const FeatureCollection> database_ptr() const { return db_; }
  IndexMode mode() const { return mode_; }
  const ApproxParams& approx_params() const { return params_; }
  const DescriptorMatrix& codebook() const { return codebook_; }
  const std::vector<std::vector<Posting>>& postings() const { return postings_; }
  std::size_t size() const { return db_->size(); }

 private:
  std::shared_ptr<const FeatureCollection> db_;
  IndexMode mode_;
  ApproxParams params_;
  DescriptorMatrix codebook_;
  std::vector<std::vector<Posting>> postings_;
};

namespace detail {

inline void normalize_or_keep(Eigen::RowVectorXd& sum, float* dst, std::size_t dim) {
  const double norm = sum.norm();
  if (!(norm > 0.0)) return;
  for (std::size_t c = 0; c < dim; ++c) dst[c] = static_cast<float>(sum[c] / norm);
}

// Nearest center by inner product for every row of `rows`; ties resolve to
// the lower center index.
inline void assign_to_centers(const DescriptorMatrix& rows, const DescriptorMatrix& centers,
                              std::vector<std::uint32_t>& assignment) {
  constexpr Eigen::Index kBlock = 4096;
  assignment.resize(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index start = 0; start < rows.rows(); start += kBlock) {
    const Eigen::Index count = std::min(kBlock, rows.rows() - start);
    const Eigen::MatrixXf scores = rows.middleRows(start, count) * centers.transpose();
    for (Eigen::Index r = 0; r < count; ++r) {
      Eigen::Index best = 0;
      float best_score = scores(r, 0);
      for (Eigen::Index c = 1; c < scores.cols(); ++c) {
        if (scores(r, c) > best_score) {
          best_score = scores(r, c);
          best = c;
        }
      }
      assignment[static_cast<std::size_t>(start + r)] = static_cast<std::uint32_t>(best);
    }
  }
}

}  // namespace detail

// Seeded spherical k-means; returns unit-norm centers.
inline DescriptorMatrix spherical_kmeans(const DescriptorMatrix& rows, std::size_t centers,
                                         std::size_t iterations, std::uint64_t seed,
                                         std::vector<std::uint32_t>* assignment_out = nullptr) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto dim = static_cast<std::size_t>(rows.cols());
  require(n > 0, ErrorCode::kEmptyDatabase, "k-means over zero descriptors");
  centers = std::clamp<std::size_t>(centers, 1, n);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < centers; ++i) {
    std::swap(order[i], order[i + rng.below(n - i)]);
  }
  DescriptorMatrix codebook(static_cast<Eigen::Index>(centers), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < centers; ++c) codebook.row(c) = rows.row(order[c]);

  std::vector<std::uint32_t> assignment;
  std::vector<std::uint32_t> previous;
  for (std::size_t it = 0; it < iterations; ++it) {
    detail::assign_to_centers(rows, codebook, assignment);
    if (assignment == previous) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(centers),
                                                 static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < n; ++r) {
      sums.row(assignment[r]) += rows.row(static_cast<Eigen::Index>(r)).cast<double>();
    }
    for (std::size_t c = 0; c < centers; ++c) {
      Eigen::RowVectorXd sum = sums.row(static_cast<Eigen::Index>(c));
      detail::normalize_or_keep(sum, codebook.data() + c * dim, dim);  // empty: keep old
    }
    previous = assignment;
  }
  detail::assign_to_centers(rows, codebook, assignment);
  if (assignment_out) *assignment_out = std::move(assignment);
  return codebook;
}

inline LocalIndex build_index(std::shared_ptr<const FeatureCollection> db,
                              IndexMode mode = IndexMode::kExact, ApproxParams params = {}) {
  require(db && !db->empty(), ErrorCode::kEmptyDatabase, "cannot index an empty database");
  if (mode == IndexMode::kExact) return LocalIndex(std::move(db), mode, params, {}, {});

  require(params.probes >= 1 && params.rescore_factor >= 1, ErrorCode::kInvalidArgument,
          "probes and rescore_factor must be positive");
  const std::size_t total = db->total_descriptors();
  const std::size_t dim = db->dim();
  DescriptorMatrix all(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  std::vector<Posting> owners;
  owners.reserve(total);
  Eigen::Index cursor = 0;
  for (std::uint32_t i = 0; i < db->size(); ++i) {
    const auto& set = (*db)[i];
    all.middleRows(cursor, static_cast<Eigen::Index>(set.size())) = set.descriptors;
    for (std::uint32_t r = 0; r < set.size(); ++r) owners.push_back({i, r});
    cursor += static_cast<Eigen::Index>(set.size());
  }
  std::size_t centers = params.num_centers;
  if (centers == 0) {
    centers = std::max<std::size_t>(1, (total + kTargetListLength / 2) / kTargetListLength);
  }
  params.num_centers = std::clamp<std::size_t>(centers, 1, total);

  std::vector<std::uint32_t> assignment;
  DescriptorMatrix codebook = spherical_kmeans(all, params.num_centers,
                                               params.kmeans_iterations, params.seed, &assignment);
  std::vector<std::vector<Posting>> postings(params.num_centers);
  for (std::size_t r = 0; r < total; ++r) postings[assignment[r]].push_back(owners[r]);
  return LocalIndex(std::move(db), mode, params, std::move(codebook), std::move(postings));
}

inline LocalIndex build_index(const FeatureCollection& db, IndexMode mode = IndexMode::kExact,
                              ApproxParams params = {}) {
  return build_index(std::make_shared<const FeatureCollection>(db), mode, params);
}

namespace detail {

inline void check_query(const LocalIndex& index, const LocalFeatureSet& query, std::size_t k) {
  require(query.size() > 0, ErrorCode::kEmptyDescriptorSet, "query has no descriptors");
  if (query.dim() != index.database().dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "query dimension " + std::to_string(query.dim()) + " vs index dimension " +
             std::to_string(index.database().dim()));
  }
  require(k >= 1, ErrorCode::kInvalidArgument, "k must be at least 1");
  if (k > index.size()) {
    fail(ErrorCode::kKTooLarge,
         "k=" + std::to_string(k) + " exceeds database size " + std::to_string(index.size()));
  }
}

inline double score_image(const LocalIndex& index, const LocalFeatureSet& query,
                          std::uint32_t image, double power) {
  const auto& set = index.database()[image];
  const double s = chamfer_similarity(query.descriptors.data(), query.size(),
                                      set.descriptors.data(), set.size(), query.dim());
  return similarity_to_dissimilarity(s, power);
}

// Accumulated per-image Chamfer estimate from the posting lists.
inline std::vector<double> accumulate_postings(const LocalIndex& index,
                                               const LocalFeatureSet& query) {
  const auto& db = index.database();
  const std::size_t dim = db.dim();
  const auto& codebook = index.codebook();
  const std::size_t centers = static_cast<std::size_t>(codebook.rows());
  const std::size_t probes = std::min(index.approx_params().probes, centers);

  std::vector<double> accumulator(db.size(), 0.0);
  std::vector<float> best(db.size(), 0.0f);
  std::vector<std::uint32_t> touched;
  std::vector<std::uint32_t> center_order(centers);
  std::vector<float> center_scores(centers);

  for (std::size_t qi = 0; qi < query.size(); ++qi) {
    const float* q = query.descriptors.data() + qi * dim;
    for (std::size_t c = 0; c < centers; ++c) {
      center_scores[c] = dot(q, codebook.data() + c * dim, dim);
    }
    std::iota(center_order.begin(), center_order.end(), 0u);
    std::partial_sort(center_order.begin(), center_order.begin() + static_cast<std::ptrdiff_t>(probes),
                      center_order.end(), [&](std::uint32_t a, std::uint32_t b) {
                        if (center_scores[a] != center_scores[b]) return center_scores[a] > center_scores[b];
                        return a < b;
                      });
    touched.clear();
    for (std::size_t p = 0; p < probes; ++p) {
      for (const Posting& posting : index.postings()[center_order[p]]) {
        const float* x = db[posting.image].descriptors.data() + posting.row * dim;
        const float ip = dot(q, x, dim);
        if (ip > best[posting.image]) {
          if (best[posting.image] == 0.0f) touched.push_back(posting.image);
          best[posting.image] = ip;
        }
      }
    }
    for (std::uint32_t image : touched) {
      accumulator[image] += best[image];
      best[image] = 0.0f;
    }
  }
  return accumulator;
}

}  // namespace detail

// Top-k database images by ascending Chamfer dissimilarity.
inline RankedList query_topk(const LocalIndex& index, const LocalFeatureSet& query,
                             std::size_t k, const ChamferParams& params = {}) {
  validate(params);
  detail::check_query(index, query, k);
  const auto n = static_cast<std::uint32_t>(index.size());

  std::vector<RankedEntry> entries;
  if (index.mode() == IndexMode::kExact) {
    entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      entries.push_back({i, detail::score_image(index, query, i, params.power)});
    }
  } else {
    const std::vector<double> accumulator = detail::accumulate_postings(index, query);
    std::vector<RankedEntry> shortlist;
    shortlist.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) shortlist.push_back({i, accumulator[i]});
    select_top(shortlist, index.approx_params().rescore_factor * k, ScoreOrder::kDescending);
    entries.reserve(shortlist.size());
    for (const auto& candidate : shortlist) {
      entries.push_back({candidate.ordinal,
                         detail::score_image(index, query, candidate.ordinal, params.power)});
    }
  }
  select_top(entries, k, ScoreOrder::kAscending);
  return {std::move(entries), ScoreOrder::kAscending};
}

// ---------------------------------------------------------------------------

struct Neighbor {
  std::uint32_t ordinal;
  float dissimilarity;

  bool operator==(const Neighbor&) const = default;
};

// Offline k_nn-nearest-neighbor dissimilarities of every database image.
// Directions are stored independently: lookup(i, j) and lookup(j, i) may
// differ or be missing.
class SparseDistances {
 public:
  SparseDistances() = default;
  SparseDistances(std::size_t k_nn, std::vector<std::vector<Neighbor>> neighbors)
      : k_nn_(k_nn), neighbors_(std::move(neighbors)) {}

  std::size_t size() const { return neighbors_.size(); }
  std::size_t k_nn() const { return k_nn_; }
  std::span<const Neighbor> neighbors(std::size_t image) const { return neighbors_[image]; }

  std::optional<double> lookup(std::size_t i, std::size_t j) const {
    for (const auto& n : neighbors_[i]) {
      if (n.ordinal == j) return static_cast<double>(n.dissimilarity);
    }
    return std::nullopt;
  }

  bool operator==(const SparseDistances&) const = default;

 private:
  std::size_t k_nn_ = 0;
  std::vector<std::vector<Neighbor>> neighbors_;
};

namespace detail {

inline std::vector<Neighbor> drop_self(const RankedList& ranked, std::uint32_t self,
                                       std::size_t k_nn) {
  std::vector<Neighbor> out;
  out.reserve(k_nn);
  for (const auto& e : ranked.items) {
    if (e.ordinal == self) continue;
    if (out.size() == k_nn) break;
    out.push_back({e.ordinal, static_cast<float>(e.score)});
  }
  return out;
}

}  // namespace detail

inline SparseDistances precompute_sparse_distances(const LocalIndex& index, std::size_t k_nn,
                                                   const ChamferParams& params = {},
                                                   std::size_t threads = 0) {
  validate(params);
  require(k_nn >= 1, ErrorCode::kInvalidArgument, "k_nn must be at least 1");
  if (k_nn >= index.size()) {
    fail(ErrorCode::kKTooLarge, "k_nn=" + std::to_string(k_nn) + " must be below database size " +
                                    std::to_string(index.size()));
  }
  std::vector<std::vector<Neighbor>> neighbors(index.size());
  parallel_for(index.size(), threads, [&](std::size_t i) {
    const auto ranked = query_topk(index, index.database()[i], k_nn + 1, params);
    neighbors[i] = detail::drop_self(ranked, static_cast<std::uint32_t>(i), k_nn);
  });
  return SparseDistances(k_nn, std::move(neighbors));
}

// The same table under another Chamfer power: d = (1 - s)^p, so
// d_to = d_from^(to / from). Neighbor order is unchanged.
inline SparseDistances with_power(const SparseDistances& sparse, double from, double to) {
  validate(ChamferParams{from});
  validate(ChamferParams{to});
  if (from == to) return sparse;
  const double exponent = to / from;
  std::vector<std::vector<Neighbor>> neighbors(sparse.size());
  for (std::size_t i = 0; i < sparse.size(); ++i) {
    for (const Neighbor& n : sparse.neighbors(i)) {
      neighbors[i].push_back({n.ordinal, static_cast<float>(std::pow(static_cast<double>(n.dissimilarity), exponent))});
    }
  }
  return SparseDistances(sparse.k_nn(), std::move(neighbors));
}

// ---------------------------------------------------------------------------
// Externally supplied pairwise similarities (e.g. a learned matcher), used in
// place of Chamfer.

class ExternalSimilarity {
 public:
  ExternalSimilarity() = default;

  void set(std::uint32_t i, std::uint32_t j, float similarity) {
    values_[key(i, j)] = similarity;
  }

  std::optional<double> similarity(std::uint32_t i, std::uint32_t j) const {
    const auto it = values_.find(key(i, j));
    if (it == values_.end()) return std::nullopt;
    return static_cast<double>(it->second);
  }

  std::size_t size() const { return values_.size(); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::vector<std::pair<std::uint64_t, float>> sorted(values_.begin(), values_.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [k, v] : sorted) {
      fn(static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xFFFFFFFFu), v);
    }
  }

 private:
  static std::uint64_t key(std::uint32_t i, std::uint32_t j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }

  std::unordered_map<std::uint64_t, float> values_;
};

inline ExternalSimilarity load_external_similarity(const std::string& path) {
  auto in = io::open_input(path);
  io::Reader reader(in, path);
  reader.expect_magic("L2GS");
  ExternalSimilarity out;
  while (!reader.at_end()) {
    const std::uint32_t i = reader.u32();
    const std::uint32_t j = reader.u32();
    const float v = reader.f32();
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, path + ": non-finite similarity");
    out.set(i, j, v);
  }
  return out;
}

inline void save_external_similarity(const ExternalSimilarity& sim, const std::string& path) {
  auto out = io::open_output(path);
  io::Writer writer(out);
  writer.magic("L2GS");
  sim.for_each([&](std::uint32_t i, std::uint32_t j, float v) {
    writer.u32(i);
    writer.u32(j);
    writer.f32(v);
  });
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

// Ranks database images 0..db_size-1 for combined ordinal `source`; absent
// pairs count as similarity 0 (dissimilarity 1).
inline RankedList query_topk(const ExternalSimilarity& sim, std::uint32_t source,
                             std::size_t db_size, std::size_t k, const ChamferParams& params = {},
                             std::optional<std::uint32_t> exclude = std::nullopt) {
  validate(params);
  require(k >= 1, ErrorCode::kInvalidArgument, "k must be at least 1");
  if (k > db_size) fail(ErrorCode::kKTooLarge, "k exceeds database size");
  std::vector<RankedEntry> entries;
  entries.reserve(db_size);
  for (std::uint32_t j = 0; j < db_size; ++j) {
    if (exclude && *exclude == j) continue;
    const double s = sim.similarity(source, j).value_or(0.0);
    entries.push_back({j, similarity_to_dissimilarity(s, params.power)});
  }
  select_top(entries, k, ScoreOrder::kAscending);
  return {std::move(entries), ScoreOrder::kAscending};
}

inline SparseDistances precompute_sparse_distances(const ExternalSimilarity& sim,
                                                   std::size_t db_size, std::size_t k_nn,
                                                   const ChamferParams& params = {}) {
  require(k_nn >= 1, ErrorCode::kInvalidArgument, "k_nn must be at least 1");
  if (k_nn >= db_size) fail(ErrorCode::kKTooLarge, "k_nn must be below database size");
  std::vector<std::vector<Neighbor>> neighbors(db_size);
  for (std::uint32_t i = 0; i < db_size; ++i) {
    const auto ranked = query_topk(sim, i, db_size, k_nn, params, i);
    neighbors[i] = detail::drop_self(ranked, i, k_nn);
  }
  return SparseDistances(k_nn, std::move(neighbors));
}

// ---------------------------------------------------------------------------
// Persistence.

inline void save_index(const LocalIndex& index, const std::string& path) {
  auto out = io::open_output(path);
  io::Writer writer(out);
  writer.magic("L2GI");
  writer.u32(kFormatVersion);
  writer.u32(static_cast<std::uint32_t>(index.mode()));
  write_collection(index.database(), out);
  if (index.mode() == IndexMode::kApproximate) {
    const auto& p = index.approx_params();
    writer.u32(static_cast<std::uint32_t>(p.probes));
    writer.u32(static_cast<std::uint32_t>(p.rescore_factor));
    writer.u32(static_cast<std::uint32_t>(p.kmeans_iterations));
    writer.u32(static_cast<std::uint32_t>(p.seed & 0xFFFFFFFFu));
    writer.u32(static_cast<std::uint32_t>(p.seed >> 32));
    const auto& codebook = index.codebook();
    writer.u32(static_cast<std::uint32_t>(codebook.rows()));
    writer.u32(static_cast<std::uint32_t>(codebook.cols()));
    writer.floats(codebook.data(), static_cast<std::size_t>(codebook.size()));
    for (const auto& list : index.postings()) {
      writer.u32(static_cast<std::uint32_t>(list.size()));
      for (const auto& posting : list) {
        writer.u32(posting.image);
        writer.u32(posting.row);
      }
    }
  }
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

inline LocalIndex load_index(const std::string& path) {
  auto in = io::open_input(path);
  io::Reader reader(in, path);
  reader.expect_magic("L2GI");
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion) {
    fail(ErrorCode::kVersionUnsupported, path + ": version " + std::to_string(version));
  }
  const std::uint32_t mode_raw = reader.u32();
  require(mode_raw <= 1, ErrorCode::kSchemaViolation, path + ": unknown index mode");
  const auto mode = static_cast<IndexMode>(mode_raw);
  auto db = std::make_shared<const FeatureCollection>(
      read_collection(in, path, LoadOptions{.max_descriptors = 0}));
  require(!db->empty(), ErrorCode::kEmptyDatabase, path + ": index holds no images");
  if (mode == IndexMode::kExact) return LocalIndex(std::move(db), mode, {}, {}, {});

  ApproxParams params;
  params.probes = reader.u32();
  params.rescore_factor = reader.u32();
  params.kmeans_iterations = reader.u32();
  const std::uint64_t seed_lo = reader.u32();
  const std::uint64_t seed_hi = reader.u32();
  params.seed = seed_lo | (seed_hi << 32);
  const std::uint32_t centers = reader.u32();
  const std::uint32_t dim = reader.u32();
  if (dim != db->dim()) fail(ErrorCode::kDimensionMismatch, path + ": codebook dimension");
  require(centers >= 1 && centers <= db->total_descriptors(), ErrorCode::kSchemaViolation,
          path + ": bad center count");
  params.num_centers = centers;
  DescriptorMatrix codebook(centers, dim);
  reader.floats(codebook.data(), static_cast<std::size_t>(centers) * dim);
  std::vector<std::vector<Posting>> postings(centers);
  std::size_t covered = 0;
  for (auto& list : postings) {
    const std::uint32_t count = reader.u32();
    require(covered + count <= db->total_descriptors(), ErrorCode::kSchemaViolation,
            path + ": posting lists exceed descriptor count");
    list.resize(count);
    for (auto& posting : list) {
      posting.image = reader.u32();
      posting.row = reader.u32();
      require(posting.image < db->size() && posting.row < (*db)[posting.image].size(),
              ErrorCode::kSchemaViolation, path + ": posting out of range");
    }
    covered += count;
  }
  require(covered == db->total_descriptors(), ErrorCode::kSchemaViolation,
          path + ": posting lists do not cover every descriptor");
  return LocalIndex(std::move(db), mode, params, std::move(codebook), std::move(postings));
}

inline void save_sparse(const SparseDistances& sparse, const std::string& path) {
  auto out = io::open_output(path);
  io::Writer writer(out);
  writer.magic("L2GD");
  writer.u32(kFormatVersion);
  writer.u32(static_cast<std::uint32_t>(sparse.size()));
  writer.u32(static_cast<std::uint32_t>(sparse.k_nn()));
  for (std::size_t i = 0; i < sparse.size(); ++i) {
    const auto list = sparse.neighbors(i);
    require(list.size() == sparse.k_nn(), ErrorCode::kSchemaViolation,
            "sparse list of image " + std::to_string(i) + " is not k_nn long");
    for (const auto& n : list) {
      writer.u32(n.ordinal);
      writer.f32(n.dissimilarity);
    }
  }
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

inline SparseDistances load_sparse(const std::string& path) {
  auto in = io::open_input(path);
  const std::uintmax_t file_size = detail::stream_size(in);
  io::Reader reader(in, path);
  reader.expect_magic("L2GD");
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion) {
    fail(ErrorCode::kVersionUnsupported, path + ": version " + std::to_string(version));
  }
  const std::uint32_t count = reader.u32();
  const std::uint32_t k_nn = reader.u32();
  if (static_cast<std::uintmax_t>(count) * k_nn * 8 > file_size) {
    fail(ErrorCode::kTruncatedFile, path + ": neighbor table exceeds file size");
  }
  std::vector<std::vector<Neighbor>> neighbors(count);
  for (auto& list : neighbors) {
    list.resize(k_nn);
    for (auto& n : list) {
      n.ordinal = reader.u32();
      n.dissimilarity = reader.f32();
      require(n.ordinal < count, ErrorCode::kSchemaViolation, path + ": ordinal out of range");
    }
  }
  return SparseDistances(k_nn, std::move(neighbors));
}

}  // namespace l2g
