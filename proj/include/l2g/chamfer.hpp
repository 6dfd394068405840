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

// Asymmetric Chamfer similarity between local feature sets:
//
//   s(Q -> X) = 1/|Q| * sum_{q in Q} max(0, max_{x in X} <q, x>)
//
// and its power-modulated dissimilarity d = (1 - s)^power, both in [0, 1].

#include <cmath>
#include <cstddef>
#include <span>

#include "l2g/common.hpp"
#include "l2g/feature_store.hpp"

namespace l2g {

struct ChamferParams {
  double power = 0.01;
};

inline void validate(const ChamferParams& params) {
  require(std::isfinite(params.power) && params.power > 0.0, ErrorCode::kInvalidArgument,
          "Chamfer power must be finite and positive");
}

// Inner product with a fixed accumulation order. Every Chamfer score in the
// library goes through this kernel so that scores computed on different
// paths (pairwise, index scan, sparse precompute) agree bit for bit.
inline float dot(const float* a, const float* b, std::size_t dim) {
  constexpr std::size_t kLanes = 8;
  float lanes[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= dim; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += a[i + l] * b[i + l];
  }
  for (std::size_t l = 0; i < dim; ++i, ++l) lanes[l] += a[i] * b[i];
  return ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) +
         ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
}

// Chamfer similarity over raw row-major blocks (n_query x dim, n_db x dim).
inline double chamfer_similarity(const float* query, std::size_t n_query, const float* db,
                                 std::size_t n_db, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t qi = 0; qi < n_query; ++qi) {
    const float* q = query + qi * dim;
    float best = 0.0f;  // negative products clamp to zero
    for (std::size_t xi = 0; xi < n_db; ++xi) {
      const float ip = dot(q, db + xi * dim, dim);
      if (ip > best) best = ip;
    }
    sum += static_cast<double>(best);
  }
  const double s = sum / static_cast<double>(n_query);
  return std::min(1.0, std::max(0.0, s));
}

inline double chamfer_similarity(const LocalFeatureSet& query, const LocalFeatureSet& db) {
  require(query.size() > 0 && db.size() > 0, ErrorCode::kEmptyDescriptorSet,
          "Chamfer similarity needs non-empty sets");
  if (query.dim() != db.dim()) {
    fail(ErrorCode::kDimensionMismatch, "query dimension " + std::to_string(query.dim()) +
                                            " vs database dimension " + std::to_string(db.dim()));
  }
  return chamfer_similarity(query.descriptors.data(), query.size(), db.descriptors.data(),
                            db.size(), query.dim());
}

// (1 - s)^power; strictly decreasing in s for any power > 0.
inline double similarity_to_dissimilarity(double similarity, double power) {
  const double gap = std::min(1.0, std::max(0.0, 1.0 - similarity));
  return std::pow(gap, power);
}

inline double chamfer_dissimilarity(const LocalFeatureSet& query, const LocalFeatureSet& db,
                                    const ChamferParams& params = {}) {
  validate(params);
  return similarity_to_dissimilarity(chamfer_similarity(query, db), params.power);
}

}  // namespace l2g
