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

// Per-query local-to-global re-ranking.
//
// For one query the local search shortlist is re-ranked as follows:
//   1. the top k_mds candidates and the query form a (k_mds+1)^2
//      dissimilarity matrix: query row from the search, candidate pairs from
//      the offline neighbor table (min over both directions, absent -> 1);
//   2. SMACOF embeds those points;
//   3. neighbor-aggregation refinement plus query expansion rescores the
//      candidates in the embedding (sg_refine);
//   4. the resulting scores are merged with refined global-feature scores
//      over the top-M pool: final = w * mds + (1 - w) * global, each side
//      min-max normalized first.
// Candidates outside the pool keep their search order below the pool.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2g/chamfer.hpp"
#include "l2g/common.hpp"
#include "l2g/feature_store.hpp"
#include "l2g/local_index.hpp"
#include "l2g/mds.hpp"

namespace l2g {

enum class RerankMode { kNone, kMdsOnly, kSgOnly, kMdsPlusSg };

// What feeds the neighbor refinement on the local side.
enum class LocalScoreSource {
  kEmbedding,      // SMACOF coordinates
  kRawSimilarity,  // 1 - dissimilarity, no embedding
};

struct RerankConfig {
  std::size_t k_mds = 700;
  std::size_t M = 1600;
  std::size_t sg_k = 6;
  double beta = 0.31;
  double w = 0.19;
  ChamferParams chamfer{0.01};
  MdsConfig mds{.dim = 128, .eps = 0.1};
  RerankMode mode = RerankMode::kMdsPlusSg;
  // false disables neighbor refinement and query expansion on both sides.
  bool sg_refinement = true;
  LocalScoreSource local_source = LocalScoreSource::kEmbedding;
  // Length of the local search shortlist; 0 ranks the whole database.
  std::size_t search_depth = 0;
};

inline void validate(const RerankConfig& config) {
  validate(config.chamfer);
  require(config.k_mds >= 1, ErrorCode::kInvalidArgument, "k_mds must be at least 1");
  require(config.M >= 1, ErrorCode::kInvalidArgument, "M must be at least 1");
  require(config.beta >= 0.0 && config.beta <= 1.0, ErrorCode::kInvalidArgument, "beta must lie in [0, 1]");
  require(config.w >= 0.0 && config.w <= 1.0, ErrorCode::kInvalidArgument, "w must lie in [0, 1]");
  require(config.mds.dim >= 1 && config.mds.eps > 0.0, ErrorCode::kInvalidArgument, "bad MDS config");
}

inline bool needs_globals(const RerankConfig& config) {
  switch (config.mode) {
    case RerankMode::kSgOnly: return true;
    case RerankMode::kMdsPlusSg: return config.w < 1.0;
    default: return false;
  }
}

inline bool needs_embedding(const RerankConfig& config) {
  return config.mode == RerankMode::kMdsOnly || config.mode == RerankMode::kMdsPlusSg;
}

struct QueryContext {
  std::vector<std::uint32_t> candidates;       // database ordinals, matrix rows 0..k-1
  std::vector<double> query_dissimilarities;   // parallel to candidates
  DissimilarityMatrix matrix;                  // (k+1)^2, query last

  std::size_t query_index() const { return candidates.size(); }
};

// Query row from `query_dists`; candidate pairs from `sparse`, symmetrized
// by taking the smaller of the two stored directions. Pairs stored in
// neither direction stay masked.
inline QueryContext build_query_matrix(std::span<const RankedEntry> query_dists,
                                       const SparseDistances& sparse) {
  QueryContext ctx;
  const std::size_t k = query_dists.size();
  ctx.matrix = DissimilarityMatrix(k + 1);
  std::vector<std::int32_t> position(sparse.size(), -1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ordinal = query_dists[i].ordinal;
    require(ordinal < sparse.size(), ErrorCode::kInvalidArgument,
            "candidate " + std::to_string(ordinal) + " is outside the neighbor table");
    require(position[ordinal] < 0, ErrorCode::kInvalidArgument,
            "candidate " + std::to_string(ordinal) + " listed twice");
    position[ordinal] = static_cast<std::int32_t>(i);
    ctx.candidates.push_back(ordinal);
    ctx.query_dissimilarities.push_back(query_dists[i].score);
    ctx.matrix.set(i, k, query_dists[i].score);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (const Neighbor& n : sparse.neighbors(ctx.candidates[a])) {
      const std::int32_t b = position[n.ordinal];
      if (b < 0 || static_cast<std::size_t>(b) == a) continue;
      const auto bi = static_cast<std::size_t>(b);
      const double value = n.dissimilarity;
      if (ctx.matrix.missing(a, bi) || value < ctx.matrix(a, bi)) ctx.matrix.set(a, bi, value);
    }
  }
  return ctx;
}

namespace detail {

// Indices of the `count` largest values in `row` (excluding `skip`), ties
// to the lower index.
inline std::vector<std::size_t> top_indices(std::span<const double> row, std::size_t count,
                                            std::size_t skip) {
  std::vector<std::size_t> idx;
  idx.reserve(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j != skip) idx.push_back(j);
  }
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (row[a] != row[b]) return row[a] > row[b];
                      return a < b;
                    });
  idx.resize(count);
  return idx;
}

inline void normalize_rows_in_place(Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double norm = rows.row(r).norm();
    if (norm > 0.0) rows.row(r) /= norm;
  }
}

}  // namespace detail

// Neighbor-aggregation refinement and query expansion over feature vectors.
//
// Rows of `points` are the candidates plus the query at `query_index`.
//  (1) every candidate becomes the normalized sum of itself and its sg_k
//      most cosine-similar candidates, each weighted by max(0, cosine);
//  (2) the query becomes normalize(q + beta * mean of the sg_k refined
//      candidates it scores highest);
//  (3) scores are cosines between refined query and refined candidates.
// Returns one score per candidate, in row order with the query skipped.
// sg_k = 0 and beta = 0 give plain cosine similarity.
template <typename Derived>
std::vector<double> sg_refine(const Eigen::MatrixBase<Derived>& points, std::size_t query_index,
                              std::size_t sg_k, double beta) {
  const auto total = static_cast<std::size_t>(points.rows());
  require(query_index < total, ErrorCode::kInvalidArgument, "query index out of range");
  const std::size_t k = total - 1;
  require(k >= 1, ErrorCode::kInvalidArgument, "sg_refine needs at least one candidate");
  require(sg_k < k || sg_k == 0, ErrorCode::kInvalidArgument, "sg_k must be below the candidate count");

  Eigen::MatrixXd candidates(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t r = 0, c = 0; r < total; ++r) {
    if (r == query_index) continue;
    candidates.row(static_cast<Eigen::Index>(c++)) = points.row(static_cast<Eigen::Index>(r)).template cast<double>();
  }
  Eigen::RowVectorXd query = points.row(static_cast<Eigen::Index>(query_index)).template cast<double>();
  if (query.norm() > 0.0) query.normalize();
  detail::normalize_rows_in_place(candidates);

  Eigen::MatrixXd refined = candidates;
  if (sg_k > 0) {
    const Eigen::MatrixXd cosine = candidates * candidates.transpose();
    std::vector<double> row(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) row[j] = cosine(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      for (std::size_t j : detail::top_indices(row, sg_k, i)) {
        const double weight = std::max(0.0, row[j]);
        refined.row(static_cast<Eigen::Index>(i)) += weight * candidates.row(static_cast<Eigen::Index>(j));
      }
    }
    detail::normalize_rows_in_place(refined);
  }

  Eigen::VectorXd scores = refined * query.transpose();
  if (sg_k > 0 && beta > 0.0) {
    std::vector<double> initial(scores.data(), scores.data() + k);
    Eigen::RowVectorXd expansion = Eigen::RowVectorXd::Zero(points.cols());
    const auto top = detail::top_indices(initial, sg_k, k);
    for (std::size_t t : top) expansion += refined.row(static_cast<Eigen::Index>(t));
    expansion /= static_cast<double>(top.size());
    Eigen::RowVectorXd expanded = query + beta * expansion;
    if (expanded.norm() > 0.0) expanded.normalize();
    scores = refined * expanded.transpose();
  }
  return {scores.data(), scores.data() + k};
}

// The same refinement driven directly by a similarity matrix (no vectors):
//   r_i = (S_qi + sum_{j in N(i)} max(0, S_ij) S_qj) / (1 + sum_{j in N(i)} max(0, S_ij))
//   score_i = r_i + beta * mean_{t in T} S_ti
// with N(i) the sg_k most similar candidates of i and T the sg_k best r.
inline std::vector<double> sg_refine_similarity(const Eigen::MatrixXd& similarity,
                                                std::size_t query_index, std::size_t sg_k,
                                                double beta) {
  const auto total = static_cast<std::size_t>(similarity.rows());
  require(similarity.rows() == similarity.cols(), ErrorCode::kDimensionMismatch, "similarity must be square");
  require(query_index < total && total >= 2, ErrorCode::kInvalidArgument, "bad query index");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < total; ++r) {
    if (r != query_index) rows.push_back(r);
  }
  const std::size_t k = rows.size();
  require(sg_k < k || sg_k == 0, ErrorCode::kInvalidArgument, "sg_k must be below the candidate count");
  const auto s = [&](std::size_t a, std::size_t b) {
    return similarity(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(rows[b]));
  };
  const auto sq = [&](std::size_t a) {
    return similarity(static_cast<Eigen::Index>(query_index), static_cast<Eigen::Index>(rows[a]));
  };
  std::vector<double> refined(k);
  std::vector<double> row(k);
  for (std::size_t i = 0; i < k; ++i) {
    double num = sq(i);
    double den = 1.0;
    if (sg_k > 0) {
      for (std::size_t j = 0; j < k; ++j) row[j] = s(i, j);
      for (std::size_t j : detail::top_indices(row, sg_k, i)) {
        const double weight = std::max(0.0, row[j]);
        num += weight * sq(j);
        den += weight;
      }
    }
    refined[i] = num / den;
  }
  if (sg_k == 0 || beta == 0.0) return refined;
  const auto top = detail::top_indices(refined, sg_k, k);
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    double expansion = 0.0;
    for (std::size_t t : top) expansion += (t == i) ? 1.0 : s(t, i);
    out[i] = refined[i] + beta * expansion / static_cast<double>(top.size());
  }
  return out;
}

// Affine map of `scores` onto [0, 1]; a constant list maps to all zeros.
inline std::vector<double> min_max_normalize(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double low = *lo;
  const double range = *hi - *lo;
  for (double& v : out) v = range > 0.0 ? (v - low) / range : 0.0;
  return out;
}

// w * norm(mds) + (1 - w) * norm(global), both min-max normalized.
inline std::vector<double> merge_scores(std::span<const double> mds_scores,
                                        std::span<const double> global_scores, double w) {
  require(mds_scores.size() == global_scores.size(), ErrorCode::kDimensionMismatch,
          "score lists cover different candidate sets");
  require(w >= 0.0 && w <= 1.0, ErrorCode::kInvalidArgument, "w must lie in [0, 1]");
  const auto a = min_max_normalize(mds_scores);
  const auto b = min_max_normalize(global_scores);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = w * a[i] + (1.0 - w) * b[i];
  return out;
}

// ---------------------------------------------------------------------------

// Global descriptors for one query: database rows aligned to ordinals.
struct GlobalInputs {
  const DescriptorMatrix* database = nullptr;
  Eigen::VectorXf query;
};

struct RerankTiming {
  double search_ms = 0.0;
  double mds_ms = 0.0;
  double rerank_ms = 0.0;
};

struct RerankResult {
  RankedList ranking;  // descending score
  RerankTiming timing;
  std::size_t mds_iterations = 0;
  double final_stress = 0.0;
  std::vector<double> stress_trace;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// Chamfer similarity recovered from d = (1 - s)^power.
inline double dissimilarity_to_similarity(double d, double power) {
  return 1.0 - std::pow(std::clamp(d, 0.0, 1.0), 1.0 / power);
}

// Local-side scores for the first `k` candidates.
inline std::vector<double> local_scores(std::span<const RankedEntry> top, const SparseDistances& sparse,
                                        const RerankConfig& config, RerankResult& result) {
  const auto start = std::chrono::steady_clock::now();
  QueryContext ctx = build_query_matrix(top, sparse);
  const std::size_t k = ctx.candidates.size();
  const std::size_t sg_k = config.sg_refinement ? std::min(config.sg_k, k - 1) : 0;
  const double beta = config.sg_refinement ? config.beta : 0.0;

  if (config.local_source == LocalScoreSource::kRawSimilarity) {
    const DissimilarityMatrix filled = fill_missing(ctx.matrix);
    const Eigen::MatrixXd similarity = Eigen::MatrixXd::Ones(k + 1, k + 1) - filled.values();
    result.timing.mds_ms += elapsed_ms(start);
    const auto rerank_start = std::chrono::steady_clock::now();
    auto scores = sg_refine_similarity(similarity, ctx.query_index(), sg_k, beta);
    result.timing.rerank_ms += elapsed_ms(rerank_start);
    return scores;
  }

  const Embedding embedding = smacof(ctx.matrix, WeightMatrix::uniform(k + 1), config.mds);
  result.mds_iterations = embedding.iterations;
  result.final_stress = embedding.final_stress();
  result.stress_trace = embedding.stress_trace;
  result.timing.mds_ms += elapsed_ms(start);
  const auto rerank_start = std::chrono::steady_clock::now();
  auto scores = sg_refine(embedding.coords, ctx.query_index(), sg_k, beta);
  result.timing.rerank_ms += elapsed_ms(rerank_start);
  return scores;
}

inline std::vector<double> global_scores(std::span<const RankedEntry> pool, const GlobalInputs& globals,
                                         const RerankConfig& config) {
  const auto& db = *globals.database;
  require(static_cast<std::size_t>(globals.query.size()) == static_cast<std::size_t>(db.cols()),
          ErrorCode::kDimensionMismatch, "query global feature has the wrong dimension");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(pool.size() + 1), db.cols());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    require(pool[i].ordinal < static_cast<std::size_t>(db.rows()), ErrorCode::kMissingGlobals,
            "no global feature for candidate " + std::to_string(pool[i].ordinal));
    points.row(static_cast<Eigen::Index>(i)) = db.row(pool[i].ordinal).cast<double>();
  }
  points.row(static_cast<Eigen::Index>(pool.size())) = globals.query.transpose().cast<double>();
  const std::size_t sg_k = config.sg_refinement ? std::min(config.sg_k, pool.size() - 1) : 0;
  const double beta = config.sg_refinement ? config.beta : 0.0;
  return sg_refine(points, pool.size(), sg_k, beta);
}

}  // namespace detail

// Re-ranks a local search shortlist (ascending dissimilarity). The input
// order is canonicalized first, so permuting it changes nothing.
inline RerankResult rerank_candidates(RankedList initial, const SparseDistances& sparse,
                                      const GlobalInputs* globals, const RerankConfig& config) {
  validate(config);
  if (needs_globals(config) && (globals == nullptr || globals->database == nullptr)) {
    fail(ErrorCode::kMissingGlobals, "re-ranking mode needs global features");
  }
  auto& items = initial.items;
  std::sort(items.begin(), items.end(), ascending_before);
  {
    std::vector<std::uint32_t> ordinals = initial.ordinals();
    std::sort(ordinals.begin(), ordinals.end());
    require(std::adjacent_find(ordinals.begin(), ordinals.end()) == ordinals.end(),
            ErrorCode::kInvalidArgument, "duplicate candidate in shortlist");
  }

  RerankResult result;
  result.ranking.order = ScoreOrder::kDescending;
  const double power = config.chamfer.power;
  std::vector<double> similarity(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    similarity[i] = detail::dissimilarity_to_similarity(items[i].score, power);
  }

  if (config.mode == RerankMode::kNone || items.empty()) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      result.ranking.items.push_back({items[i].ordinal, similarity[i]});
    }
    return result;
  }

  const std::size_t pool = std::min(std::max(config.k_mds, config.M), items.size());
  const std::size_t k = std::min(config.k_mds, items.size());
  const std::span<const RankedEntry> pool_items(items.data(), pool);
  std::vector<double> pool_similarity(similarity.begin(), similarity.begin() + static_cast<std::ptrdiff_t>(pool));
  std::vector<double> final_scores;

  std::vector<double> local;
  if (needs_embedding(config) && k >= 2) {
    const auto refined = detail::local_scores(pool_items.first(k), sparse, config, result);
    const auto refined_norm = min_max_normalize(refined);
    const auto chamfer_norm = min_max_normalize(pool_similarity);
    local.resize(pool);
    for (std::size_t i = 0; i < pool; ++i) local[i] = i < k ? refined_norm[i] : chamfer_norm[i];
  } else if (needs_embedding(config)) {
    local = min_max_normalize(pool_similarity);
  }

  const auto rerank_start = std::chrono::steady_clock::now();
  std::vector<double> global;
  if (needs_globals(config) && pool >= 2) {
    global = detail::global_scores(pool_items, *globals, config);
  } else if (needs_globals(config)) {
    global.assign(pool, 0.0);
  }
  switch (config.mode) {
    case RerankMode::kMdsOnly:
      final_scores = local;
      break;
    case RerankMode::kSgOnly:
      final_scores = min_max_normalize(global);
      break;
    case RerankMode::kMdsPlusSg:
      final_scores = global.empty() ? local : merge_scores(local, global, config.w);
      break;
    case RerankMode::kNone:
      break;
  }

  std::vector<RankedEntry> ranked;
  ranked.reserve(items.size());
  for (std::size_t i = 0; i < pool; ++i) ranked.push_back({items[i].ordinal, final_scores[i]});
  std::sort(ranked.begin(), ranked.end(), descending_before);
  // Tail keeps search order; its scores sit below every pool score.
  for (std::size_t i = pool; i < items.size(); ++i) {
    ranked.push_back({items[i].ordinal, similarity[i] - 2.0});
  }
  result.ranking.items = std::move(ranked);
  result.timing.rerank_ms += detail::elapsed_ms(rerank_start);
  return result;
}

inline std::size_t shortlist_length(const RerankConfig& config, std::size_t db_size) {
  const std::size_t wanted = config.search_depth == 0
                                 ? db_size
                                 : std::max(config.search_depth, std::max(config.k_mds, config.M));
  return std::min(wanted, db_size);
}

// Full pipeline for one query against a Chamfer index.
inline RerankResult l2g_query(const LocalIndex& index, const SparseDistances& sparse,
                              const LocalFeatureSet& query, const GlobalInputs* globals,
                              const RerankConfig& config) {
  validate(config);
  if (needs_globals(config) && (globals == nullptr || globals->database == nullptr)) {
    fail(ErrorCode::kMissingGlobals, "re-ranking mode needs global features");
  }
  require(sparse.size() == index.size(), ErrorCode::kDimensionMismatch,
          "neighbor table and index cover different databases");
  const auto start = std::chrono::steady_clock::now();
  RankedList initial = query_topk(index, query, shortlist_length(config, index.size()), config.chamfer);
  const double search_ms = detail::elapsed_ms(start);
  RerankResult result = rerank_candidates(std::move(initial), sparse, globals, config);
  result.timing.search_ms = search_ms;
  return result;
}

// Full pipeline with externally supplied similarities; `query` is the
// combined ordinal (database size + query position).
inline RerankResult l2g_query(const ExternalSimilarity& similarity, std::uint32_t query,
                              std::size_t db_size, const SparseDistances& sparse,
                              const GlobalInputs* globals, const RerankConfig& config) {
  validate(config);
  require(sparse.size() == db_size, ErrorCode::kDimensionMismatch,
          "neighbor table and database size disagree");
  const auto start = std::chrono::steady_clock::now();
  RankedList initial = query_topk(similarity, query, db_size, shortlist_length(config, db_size), config.chamfer);
  const double search_ms = detail::elapsed_ms(start);
  RerankResult result = rerank_candidates(std::move(initial), sparse, globals, config);
  result.timing.search_ms = search_ms;
  return result;
}

// Cosine ranking of the whole database by global features.
inline RankedList global_search(const DescriptorMatrix& database, const Eigen::VectorXf& query) {
  require(query.size() == database.cols(), ErrorCode::kDimensionMismatch,
          "query global feature has the wrong dimension");
  const Eigen::VectorXf scores = database * query;
  RankedList out;
  out.order = ScoreOrder::kDescending;
  out.items.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    out.items.push_back({static_cast<std::uint32_t>(i), static_cast<double>(scores(i))});
  }
  std::sort(out.items.begin(), out.items.end(), descending_before);
  return out;
}

}  // namespace l2g
