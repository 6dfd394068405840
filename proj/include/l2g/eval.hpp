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

// Revisited-protocol retrieval metrics.
//
// medium: positives = easy + hard, ignored = junk
// hard:   positives = hard,        ignored = junk + easy
//
// Ignored images are removed from a ranking before scoring. AP is the mean
// over positives of precision at each positive's filtered rank (positives
// never retrieved contribute 0). Queries without positives are excluded
// from mAP.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "l2g/common.hpp"
#include "l2g/feature_store.hpp"

namespace l2g {

enum class Protocol { kMedium, kHard };

inline std::string_view protocol_name(Protocol p) { return p == Protocol::kMedium ? "medium" : "hard"; }

struct QueryGroundTruth {
  std::vector<std::uint32_t> easy;
  std::vector<std::uint32_t> hard;
  std::vector<std::uint32_t> junk;
};

struct GroundTruth {
  std::vector<std::string> query_ids;
  std::vector<QueryGroundTruth> queries;

  std::size_t size() const { return queries.size(); }
};

inline void validate(const QueryGroundTruth& gt) {
  std::unordered_set<std::uint32_t> seen;
  for (const auto* list : {&gt.easy, &gt.hard, &gt.junk}) {
    std::unordered_set<std::uint32_t> own(list->begin(), list->end());
    for (std::uint32_t id : own) {
      if (!seen.insert(id).second) {
        fail(ErrorCode::kOverlappingGtSets,
             "database ordinal " + std::to_string(id) + " appears in two label sets");
      }
    }
  }
}

namespace detail {

struct Labels {
  std::unordered_set<std::uint32_t> positives;
  std::unordered_set<std::uint32_t> ignored;
};

inline Labels labels_for(const QueryGroundTruth& gt, Protocol protocol) {
  validate(gt);
  Labels labels;
  labels.positives.insert(gt.hard.begin(), gt.hard.end());
  labels.ignored.insert(gt.junk.begin(), gt.junk.end());
  if (protocol == Protocol::kMedium) {
    labels.positives.insert(gt.easy.begin(), gt.easy.end());
  } else {
    labels.ignored.insert(gt.easy.begin(), gt.easy.end());
  }
  return labels;
}

}  // namespace detail

// AP of one ranking, or nullopt when the protocol leaves no positives.
inline std::optional<double> average_precision(std::span<const std::uint32_t> ranking,
                                               const QueryGroundTruth& gt, Protocol protocol) {
  const detail::Labels labels = detail::labels_for(gt, protocol);
  if (labels.positives.empty()) return std::nullopt;
  std::unordered_set<std::uint32_t> seen;
  std::size_t rank = 0;
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::uint32_t id : ranking) {
    if (labels.ignored.count(id) || !seen.insert(id).second) continue;
    ++rank;
    if (labels.positives.count(id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(labels.positives.size());
}

struct MapResult {
  double map = 0.0;                              // percent
  std::vector<std::optional<double>> per_query;  // raw AP in [0, 1]
  std::size_t evaluated = 0;
};

inline MapResult evaluate_map(const std::vector<std::vector<std::uint32_t>>& rankings,
                              const GroundTruth& gt, Protocol protocol) {
  require(rankings.size() == gt.size(), ErrorCode::kDimensionMismatch,
          "got " + std::to_string(rankings.size()) + " rankings for " +
              std::to_string(gt.size()) + " queries");
  MapResult result;
  double total = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    auto ap = average_precision(rankings[q], gt.queries[q], protocol);
    if (ap) {
      total += *ap;
      ++result.evaluated;
    }
    result.per_query.push_back(ap);
  }
  result.map = result.evaluated ? 100.0 * total / static_cast<double>(result.evaluated) : 0.0;
  return result;
}

// Mean AP over queries with positives, as a percentage.
inline double mean_ap(const std::vector<std::vector<std::uint32_t>>& rankings,
                      const GroundTruth& gt, Protocol protocol) {
  return evaluate_map(rankings, gt, protocol).map;
}

// Rounded to one decimal for reporting.
inline double round1(double value) { return std::round(value * 10.0) / 10.0; }

// (K, total positives within the first K non-ignored entries, summed over
// queries) for K = 1..k_max.
inline std::vector<std::pair<std::size_t, std::size_t>> recall_curve(
    const std::vector<std::vector<std::uint32_t>>& rankings, const GroundTruth& gt,
    Protocol protocol, std::size_t k_max) {
  require(k_max >= 1, ErrorCode::kInvalidArgument, "k_max must be at least 1");
  require(rankings.size() == gt.size(), ErrorCode::kDimensionMismatch,
          "rankings and ground truth disagree in length");
  std::vector<std::size_t> gained(k_max + 1, 0);
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const detail::Labels labels = detail::labels_for(gt.queries[q], protocol);
    std::unordered_set<std::uint32_t> seen;
    std::size_t rank = 0;
    for (std::uint32_t id : rankings[q]) {
      if (labels.ignored.count(id) || !seen.insert(id).second) continue;
      if (++rank > k_max) break;
      if (labels.positives.count(id)) ++gained[rank];
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> curve;
  curve.reserve(k_max);
  std::size_t running = 0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    running += gained[k];
    curve.emplace_back(k, running);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// gt.json: { "queries": [ { "id": str, "easy": [str], "hard": [str], "junk": [str] } ] }

// `ordinal_of` maps a database image id to its ordinal (or throws).
inline GroundTruth ground_truth_from_json(const nlohmann::json& doc,
                                          const std::function<std::uint32_t(const std::string&)>& ordinal_of,
                                          const std::string& source = "ground truth") {
  if (!doc.is_object() || !doc.contains("queries") || !doc.at("queries").is_array()) {
    fail(ErrorCode::kSchemaViolation, source + ": expected an object with a 'queries' array");
  }
  GroundTruth gt;
  for (const auto& entry : doc.at("queries")) {
    if (!entry.is_object() || !entry.contains("id") || !entry.at("id").is_string()) {
      fail(ErrorCode::kSchemaViolation, source + ": every query needs a string 'id'");
    }
    QueryGroundTruth q;
    const auto read = [&](const char* key, std::vector<std::uint32_t>& out) {
      if (!entry.contains(key)) return;
      if (!entry.at(key).is_array()) fail(ErrorCode::kSchemaViolation, source + ": '" + key + "' must be an array");
      for (const auto& id : entry.at(key)) {
        if (!id.is_string()) fail(ErrorCode::kSchemaViolation, source + ": ids must be strings");
        out.push_back(ordinal_of(id.get<std::string>()));
      }
    };
    read("easy", q.easy);
    read("hard", q.hard);
    read("junk", q.junk);
    validate(q);
    gt.query_ids.push_back(entry.at("id").get<std::string>());
    gt.queries.push_back(std::move(q));
  }
  return gt;
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& doc, const FeatureCollection& db,
                                          const std::string& source = "ground truth") {
  return ground_truth_from_json(
      doc, [&](const std::string& id) { return db.ordinal_of(id); }, source);
}

inline nlohmann::json read_json(const std::string& path) {
  auto in = io::open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
}

inline GroundTruth load_ground_truth(const std::string& path, const FeatureCollection& db) {
  return ground_truth_from_json(read_json(path), db, path);
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& gt, const FeatureCollection& db) {
  nlohmann::json queries = nlohmann::json::array();
  for (std::size_t q = 0; q < gt.size(); ++q) {
    const auto ids = [&](const std::vector<std::uint32_t>& list) {
      nlohmann::json out = nlohmann::json::array();
      for (auto o : list) out.push_back(db[o].image_id);
      return out;
    };
    queries.push_back({{"id", gt.query_ids[q]},
                       {"easy", ids(gt.queries[q].easy)},
                       {"hard", ids(gt.queries[q].hard)},
                       {"junk", ids(gt.queries[q].junk)}});
  }
  return {{"queries", queries}};
}

// Reorders ground truth entries to follow `query_ids`.
inline GroundTruth align_ground_truth(const GroundTruth& gt, const std::vector<std::string>& query_ids) {
  GroundTruth out;
  for (const auto& id : query_ids) {
    const auto it = std::find(gt.query_ids.begin(), gt.query_ids.end(), id);
    if (it == gt.query_ids.end()) fail(ErrorCode::kUnknownId, "no ground truth for query '" + id + "'");
    out.query_ids.push_back(id);
    out.queries.push_back(gt.queries[static_cast<std::size_t>(it - gt.query_ids.begin())]);
  }
  return out;
}

}  // namespace l2g
