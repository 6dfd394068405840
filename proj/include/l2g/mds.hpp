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

// Weighted SMACOF multidimensional scaling over (possibly incomplete,
// possibly non-metric) dissimilarity matrices.
//
// Raw stress:  sigma(X) = sum_{i<j} w_ij (delta_ij - ||x_i - x_j||)^2
// where delta is the dissimilarity itself (metric mode) or the isotonic
// disparity (non-metric mode). Each iteration applies the Guttman transform
//
//     X <- V^+ B(X) X,   V = diag(W 1) - W,
//     B(X)_ij = -w_ij delta_ij / ||x_i - x_j||  (0 when the distance is 0),
//     B(X)_ii = -sum_{j != i} B(X)_ij,
//
// which never increases stress. In non-metric mode the disparities are
// refitted after every step by weighted pool-adjacent-violators and rescaled
// to sum w d*^2 = sum w d^2; that refit is the optimum over the feasible
// cone on that sphere, so the recorded trace stays non-increasing too.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "l2g/common.hpp"

namespace l2g {

using Coordinates = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Symmetric dissimilarities with a zero diagonal and a missing-entry mask.
class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;

  // n x n matrix with every off-diagonal entry missing.
  explicit DissimilarityMatrix(std::size_t n)
      : values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))),
        missing_(n * n, 1) {
    for (std::size_t i = 0; i < n; ++i) missing_[i * n + i] = 0;
  }

  static DissimilarityMatrix from_dense(const Eigen::MatrixXd& d) {
    require(d.rows() == d.cols(), ErrorCode::kDimensionMismatch, "dissimilarities must be square");
    const auto n = static_cast<std::size_t>(d.rows());
    DissimilarityMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
      require(d(i, i) == 0.0, ErrorCode::kInvalidArgument, "diagonal must be zero");
      for (std::size_t j = i + 1; j < n; ++j) {
        require(std::abs(d(i, j) - d(j, i)) <= 1e-12 * std::max(1.0, std::abs(d(i, j))),
                ErrorCode::kInvalidArgument, "dissimilarities must be symmetric");
        out.set(i, j, d(i, j));
      }
    }
    return out;
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }

  void set(std::size_t i, std::size_t j, double value) {
    require(i != j, ErrorCode::kInvalidArgument, "diagonal entries are fixed at zero");
    require(std::isfinite(value) && value >= 0.0, ErrorCode::kInvalidArgument,
            "dissimilarity must be finite and non-negative");
    values_(i, j) = values_(j, i) = value;
    missing_[i * size() + j] = missing_[j * size() + i] = 0;
  }

  void mark_missing(std::size_t i, std::size_t j) {
    if (i == j) return;
    values_(i, j) = values_(j, i) = 0.0;
    missing_[i * size() + j] = missing_[j * size() + i] = 1;
  }

  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  bool missing(std::size_t i, std::size_t j) const { return missing_[i * size() + j] != 0; }

  std::size_t missing_count() const {
    return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), 1)) / 2;
  }
  bool complete() const { return missing_count() == 0; }

  // Missing entries read as 0 here.
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::uint8_t> missing_;
};

// Symmetric non-negative pair weights with a zero diagonal.
class WeightMatrix {
 public:
  WeightMatrix() = default;

  explicit WeightMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {
    require(w_.rows() == w_.cols(), ErrorCode::kDimensionMismatch, "weights must be square");
    const auto n = w_.rows();
    uniform_ = n > 1;
    const double first = n > 1 ? w_(0, 1) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      require(w_(i, i) == 0.0, ErrorCode::kInvalidArgument, "weight diagonal must be zero");
      for (Eigen::Index j = 0; j < n; ++j) {
        require(std::isfinite(w_(i, j)) && w_(i, j) >= 0.0, ErrorCode::kInvalidArgument,
                "weights must be finite and non-negative");
        require(w_(i, j) == w_(j, i), ErrorCode::kInvalidArgument, "weights must be symmetric");
        if (i != j && w_(i, j) != first) uniform_ = false;
      }
    }
    uniform_value_ = first;
  }

  static WeightMatrix uniform(std::size_t n) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    w.diagonal().setZero();
    return WeightMatrix(std::move(w));
  }

  std::size_t size() const { return static_cast<std::size_t>(w_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  const Eigen::MatrixXd& values() const { return w_; }

  // All off-diagonal weights share one positive value.
  bool is_uniform() const { return uniform_ && uniform_value_ > 0.0; }
  double uniform_value() const { return uniform_value_; }

 private:
  Eigen::MatrixXd w_;
  bool uniform_ = false;
  double uniform_value_ = 0.0;
};

enum class MdsMode { kMetric, kNonmetric };
enum class MdsInit { kClassical, kRandom, kGiven };

struct MdsConfig {
  std::size_t dim = 128;
  double eps = 0.1;
  std::size_t max_iter = 100;
  MdsMode mode = MdsMode::kMetric;
  MdsInit init = MdsInit::kClassical;
  std::uint64_t seed = 0;
};

struct Embedding {
  Coordinates coords;
  std::vector<double> stress_trace;  // entry 0 is the initial configuration
  std::size_t iterations = 0;
  bool converged = false;
  MdsInit init_used = MdsInit::kClassical;
  std::uint64_t seed = 0;

  std::size_t dim() const { return static_cast<std::size_t>(coords.cols()); }
  double final_stress() const { return stress_trace.empty() ? 0.0 : stress_trace.back(); }
};

// Every missing off-diagonal entry becomes exactly 1.0.
inline DissimilarityMatrix fill_missing(const DissimilarityMatrix& matrix) {
  DissimilarityMatrix out = matrix;
  const std::size_t n = matrix.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (matrix.missing(i, j)) out.set(i, j, 1.0);
    }
  }
  return out;
}

// Euclidean distances between the rows of `coords`, computed from the
// coordinate differences (no Gram-matrix cancellation).
inline Eigen::MatrixXd pairwise_distances(const Coordinates& coords) {
  const auto n = coords.rows();
  const auto dim = static_cast<std::size_t>(coords.cols());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* xi = coords.data() + i * coords.cols();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double* xj = coords.data() + j * coords.cols();
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t k = 0;
      for (; k + 4 <= dim; k += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
          const double diff = xi[k + l] - xj[k + l];
          acc[l] += diff * diff;
        }
      }
      for (std::size_t l = 0; k < dim; ++k, ++l) {
        const double diff = xi[k] - xj[k];
        acc[l] += diff * diff;
      }
      const double d = std::sqrt((acc[0] + acc[2]) + (acc[1] + acc[3]));
      dist(i, j) = dist(j, i) = d;
    }
  }
  return dist;
}

namespace detail {

inline double stress_from_distances(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& targets,
                                    const WeightMatrix& weights) {
  const auto n = dist.rows();
  double sigma = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double w = weights.values()(i, j);
      if (w == 0.0) continue;
      const double r = targets(i, j) - dist(i, j);
      sigma += w * r * r;
    }
  }
  return sigma;
}

}  // namespace detail

// Raw stress of `coords` against explicit targets.
inline double stress(const Coordinates& coords, const Eigen::MatrixXd& targets,
                     const WeightMatrix& weights) {
  const auto n = static_cast<std::size_t>(coords.rows());
  require(static_cast<std::size_t>(targets.rows()) == n && weights.size() == n,
          ErrorCode::kDimensionMismatch, "stress: shapes disagree");
  return detail::stress_from_distances(pairwise_distances(coords), targets, weights);
}

// Raw (metric) stress against a complete dissimilarity matrix.
inline double stress(const Coordinates& coords, const DissimilarityMatrix& matrix,
                     const WeightMatrix& weights) {
  require(matrix.complete(), ErrorCode::kInvalidArgument, "stress needs a complete matrix");
  return stress(coords, matrix.values(), weights);
}

// Weighted pool-adjacent-violators: the monotone least-squares fit of
// `dist` against the rank order of `d`. Entries with equal `d` share one
// block (secondary tie approach). `weights` may be empty (all ones).
inline std::vector<double> isotonic_disparities(std::span<const double> d,
                                                std::span<const double> dist,
                                                std::span<const double> weights = {}) {
  require(d.size() == dist.size(), ErrorCode::kDimensionMismatch,
          "isotonic_disparities: length mismatch");
  require(weights.empty() || weights.size() == d.size(), ErrorCode::kDimensionMismatch,
          "isotonic_disparities: weight length mismatch");
  const std::size_t m = d.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  struct Block {
    double sum;     // weighted sum of dist
    double weight;  // total weight
    std::size_t begin, end;  // range in `order`
    double mean() const { return weight > 0.0 ? sum / weight : 0.0; }
  };
  std::vector<Block> blocks;
  blocks.reserve(m);
  std::size_t pos = 0;
  while (pos < m) {
    Block block{0.0, 0.0, pos, pos};
    const double key = d[order[pos]];
    while (pos < m && d[order[pos]] == key) {
      const std::size_t idx = order[pos];
      const double w = weights.empty() ? 1.0 : weights[idx];
      block.sum += w * dist[idx];
      block.weight += w;
      ++pos;
    }
    block.end = pos;
    blocks.push_back(block);
    // Merge backwards while the sequence of block means decreases.
    while (blocks.size() > 1) {
      Block& last = blocks.back();
      Block& prev = blocks[blocks.size() - 2];
      if (prev.mean() <= last.mean()) break;
      prev.sum += last.sum;
      prev.weight += last.weight;
      prev.end = last.end;
      blocks.pop_back();
    }
  }
  std::vector<double> out(m, 0.0);
  for (const auto& block : blocks) {
    const double value = block.mean();
    for (std::size_t k = block.begin; k < block.end; ++k) out[order[k]] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classical (Torgerson) scaling, used as the SMACOF initializer.

namespace detail {

struct Eigenpairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

inline Eigenpairs top_eigenpairs_full(const Eigen::MatrixXd& sym, std::size_t count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kEigenFailure, "eigendecomposition failed");
  const auto n = sym.rows();
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(count, static_cast<std::size_t>(n)));
  Eigenpairs out;
  out.values = solver.eigenvalues().tail(k).reverse();
  out.vectors = solver.eigenvectors().rightCols(k).rowwise().reverse();
  return out;
}

inline Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

// Randomized subspace iteration with Rayleigh-Ritz extraction for the
// leading `count` eigenpairs of a double-centered matrix (rows sum to zero,
// so the all-ones direction is projected out). O(n^2 count) per pass.
//
// Query matrices are close to a regular simplex: almost the whole spectrum
// sits in a narrow band and the useful eigenvalues barely clear it. The
// iteration runs on sym - lambda_min, which puts the band edge near zero
// and makes the top of the band separate geometrically.
inline Eigenpairs top_eigenpairs_subspace(const Eigen::MatrixXd& sym, std::size_t count,
                                          std::uint64_t seed, std::size_t passes = 12) {
  const auto n = sym.rows();
  const auto width = static_cast<Eigen::Index>(std::min<std::size_t>(count + 16, static_cast<std::size_t>(n) - 1));
  Rng rng(seed ^ 0xC1A551CA1ULL);
  const auto centered_normal = [&](Eigen::Index cols) {
    Eigen::MatrixXd m(n, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) m(r, c) = rng.normal();
    }
    m.rowwise() -= m.colwise().mean();
    return m;
  };

  // Lowest eigenvalue by power iteration on (bound - sym).
  const double bound = sym.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::VectorXd v = centered_normal(1).col(0).normalized();
  double lowest = v.dot(sym * v);
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd next = bound * v - sym * v;
    next.array() -= next.mean();
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    v = next / norm;
    lowest = v.dot(sym * v);
  }

  Eigen::MatrixXd q = orthonormal_columns(centered_normal(width));
  for (std::size_t p = 0; p < passes; ++p) {
    Eigen::MatrixXd next = sym * q - lowest * q;
    q = orthonormal_columns(next);
  }
  const Eigen::MatrixXd projected = q.transpose() * sym * q;
  Eigenpairs small = top_eigenpairs_full(0.5 * (projected + projected.transpose()), count);
  return {small.values, q * small.vectors};
}

}  // namespace detail

// Torgerson double centering of squared dissimilarities; coordinates are the
// leading eigenvectors scaled by sqrt(max(eigenvalue, 0)). Columns beyond
// the matrix rank are zero.
inline Coordinates classical_init(const DissimilarityMatrix& matrix, std::size_t dim,
                                  std::uint64_t seed = 0) {
  require(matrix.complete(), ErrorCode::kInvalidArgument, "classical_init needs a complete matrix");
  require(dim >= 1, ErrorCode::kInvalidArgument, "dim must be at least 1");
  const auto n = static_cast<Eigen::Index>(matrix.size());
  const Eigen::MatrixXd sq = matrix.values().cwiseProduct(matrix.values());
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const double grand_mean = row_mean.mean();
  Eigen::MatrixXd centered(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      centered(i, j) = -0.5 * (sq(i, j) - row_mean(i) - row_mean(j) + grand_mean);
    }
  }
  const std::size_t want = std::min<std::size_t>(dim, static_cast<std::size_t>(n));
  constexpr std::size_t kFullSolveLimit = 300;
  const detail::Eigenpairs pairs =
      (static_cast<std::size_t>(n) <= kFullSolveLimit || 4 * (want + 16) >= static_cast<std::size_t>(n))
          ? detail::top_eigenpairs_full(centered, want)
          : detail::top_eigenpairs_subspace(centered, want, seed);
  if (!pairs.values.allFinite() || !pairs.vectors.allFinite()) {
    fail(ErrorCode::kEigenFailure, "non-finite eigenpairs");
  }
  Coordinates coords = Coordinates::Zero(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < pairs.values.size(); ++c) {
    const double scale = std::sqrt(std::max(0.0, pairs.values(c)));
    coords.col(c) = pairs.vectors.col(c) * scale;
  }
  return coords;
}

inline Coordinates random_init(std::size_t n, std::size_t dim, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Coordinates coords(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = scale * rng.normal();
  return coords;
}

// ---------------------------------------------------------------------------

namespace detail {

// Non-metric bookkeeping: weighted pairs in rank order of d, plus the
// normalization constant sum w d^2.
struct DisparityModel {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  std::vector<double> d;
  std::vector<double> w;
  double target_norm = 0.0;

  DisparityModel(const DissimilarityMatrix& filled, const WeightMatrix& weights) {
    const auto n = static_cast<Eigen::Index>(filled.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double wij = weights.values()(i, j);
        if (wij == 0.0) continue;
        pairs.emplace_back(i, j);
        d.push_back(filled.values()(i, j));
        w.push_back(wij);
        target_norm += wij * filled.values()(i, j) * filled.values()(i, j);
      }
    }
  }

  // Refits disparities to `dist`; returns false when the fit is all zeros
  // (then `targets` is left untouched).
  bool refit(const Eigen::MatrixXd& dist, Eigen::MatrixXd& targets) const {
    std::vector<double> current(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) current[k] = dist(pairs[k].first, pairs[k].second);
    std::vector<double> fitted = isotonic_disparities(d, current, w);
    double norm = 0.0;
    for (std::size_t k = 0; k < fitted.size(); ++k) norm += w[k] * fitted[k] * fitted[k];
    if (!(norm > 0.0)) return false;
    const double scale = std::sqrt(target_norm / norm);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double value = fitted[k] * scale;
      targets(pairs[k].first, pairs[k].second) = value;
      targets(pairs[k].second, pairs[k].first) = value;
    }
    return true;
  }
};

inline void check_weights(const WeightMatrix& weights) {
  const auto n = static_cast<Eigen::Index>(weights.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights.values().row(i).sum() > 0.0)) {
      fail(ErrorCode::kDegenerateWeights,
           "point " + std::to_string(i) + " has no positive weight");
    }
  }
}

// Moore-Penrose pseudoinverse of V = diag(W 1) - W.
inline Eigen::MatrixXd laplacian_pseudoinverse(const WeightMatrix& weights) {
  const Eigen::MatrixXd& w = weights.values();
  Eigen::MatrixXd v = -w;
  v.diagonal() = w.rowwise().sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kEigenFailure, "Laplacian eigendecomposition failed");
  const double tol = 1e-10 * std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = solver.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > tol ? 1.0 / inv(i) : 0.0;
  return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

inline Eigen::MatrixXd guttman_b(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& targets,
                                 const WeightMatrix& weights) {
  const auto n = dist.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double dij = dist(i, j);
      const double value = dij > 0.0 ? -weights.values()(i, j) * targets(i, j) / dij : 0.0;
      b(i, j) = b(j, i) = value;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) b(i, i) = -b.col(i).sum();
  return b;
}

}  // namespace detail

// SMACOF from an explicit starting configuration (n x dim).
inline Embedding smacof(const DissimilarityMatrix& matrix, const WeightMatrix& weights,
                        const MdsConfig& config, Coordinates initial, MdsInit init_used) {
  const std::size_t n = matrix.size();
  require(n >= 2, ErrorCode::kInvalidArgument, "SMACOF needs at least two points");
  require(config.dim >= 1, ErrorCode::kInvalidArgument, "dim must be at least 1");
  require(config.eps > 0.0, ErrorCode::kInvalidArgument, "eps must be positive");
  require(weights.size() == n, ErrorCode::kDimensionMismatch, "weights do not match matrix size");
  require(static_cast<std::size_t>(initial.rows()) == n &&
              static_cast<std::size_t>(initial.cols()) == config.dim,
          ErrorCode::kDimensionMismatch, "initial configuration has the wrong shape");
  detail::check_weights(weights);

  const DissimilarityMatrix filled = fill_missing(matrix);
  Eigen::MatrixXd targets = filled.values();
  std::optional<detail::DisparityModel> disparities;
  if (config.mode == MdsMode::kNonmetric) disparities.emplace(filled, weights);

  Eigen::MatrixXd v_plus;
  if (!weights.is_uniform()) v_plus = detail::laplacian_pseudoinverse(weights);
  const double uniform_scale =
      weights.is_uniform() ? 1.0 / (static_cast<double>(n) * weights.uniform_value()) : 0.0;

  Embedding out;
  out.coords = std::move(initial);
  out.init_used = init_used;
  out.seed = config.seed;

  Eigen::MatrixXd dist = pairwise_distances(out.coords);
  if (disparities) disparities->refit(dist, targets);
  out.stress_trace.push_back(detail::stress_from_distances(dist, targets, weights));

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    const Eigen::MatrixXd b = detail::guttman_b(dist, targets, weights);
    Coordinates next;
    if (weights.is_uniform()) {
      next = uniform_scale * (b * out.coords);
    } else {
      next = v_plus * (b * out.coords);
    }
    if (!next.allFinite()) fail(ErrorCode::kNonFinite, "Guttman transform produced non-finite coordinates");
    out.coords = std::move(next);
    dist = pairwise_distances(out.coords);
    if (disparities) disparities->refit(dist, targets);
    const double current = detail::stress_from_distances(dist, targets, weights);
    if (!std::isfinite(current)) fail(ErrorCode::kNonFinite, "stress became non-finite");
    const double previous = out.stress_trace.back();
    out.stress_trace.push_back(current);
    out.iterations = it + 1;
    if ((previous - current) / std::max(previous, 1e-12) < config.eps) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// SMACOF with the configured initializer. Missing entries are filled with
// 1.0 first. A failed classical initialization falls back to a random one
// seeded with config.seed (recorded in Embedding::init_used).
inline Embedding smacof(const DissimilarityMatrix& matrix, const WeightMatrix& weights,
                        const MdsConfig& config = {}) {
  require(matrix.size() >= 2, ErrorCode::kInvalidArgument, "SMACOF needs at least two points");
  require(config.init != MdsInit::kGiven, ErrorCode::kInvalidArgument,
          "MdsInit::kGiven requires an explicit starting configuration");
  const DissimilarityMatrix filled = fill_missing(matrix);
  const auto random_start = [&] {
    const std::size_t n = filled.size();
    double mean = filled.values().sum() / static_cast<double>(n * (n - 1));
    if (!(mean > 0.0)) mean = 1.0;
    return random_init(n, config.dim, mean / std::sqrt(2.0 * static_cast<double>(config.dim)),
                       config.seed);
  };
  if (config.init == MdsInit::kClassical) {
    try {
      return smacof(filled, weights, config, classical_init(filled, config.dim, config.seed),
                    MdsInit::kClassical);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEigenFailure) throw;
    }
  }
  return smacof(filled, weights, config, random_start(), MdsInit::kRandom);
}

inline Embedding smacof(const DissimilarityMatrix& matrix, const MdsConfig& config = {}) {
  return smacof(matrix, WeightMatrix::uniform(matrix.size()), config);
}

}  // namespace l2g
