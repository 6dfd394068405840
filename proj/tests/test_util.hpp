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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "l2g/common.hpp"
#include "l2g/feature_store.hpp"

namespace l2g::testing {

inline DescriptorMatrix random_unit_rows(Rng& rng, std::size_t n, std::size_t dim) {
  DescriptorMatrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    double sq = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      rows(r, c) = static_cast<float>(rng.normal());
      sq += static_cast<double>(rows(r, c)) * rows(r, c);
    }
    rows.row(r) /= static_cast<float>(std::sqrt(sq));
  }
  return rows;
}

inline LocalFeatureSet random_set(Rng& rng, const std::string& id, std::size_t n, std::size_t dim) {
  return {id, random_unit_rows(rng, n, dim)};
}

// `count` images with 3..12 descriptors each.
inline FeatureCollection random_collection(std::uint64_t seed, std::size_t count, std::size_t dim,
                                           const std::string& prefix = "img_") {
  Rng rng(seed);
  FeatureCollection out;
  for (std::size_t i = 0; i < count; ++i) {
    out.add(random_set(rng, prefix + std::to_string(i), 3 + rng.below(10), dim));
  }
  return out;
}

// Textbook Chamfer in double precision, written independently of the
// library kernel.
inline double chamfer_oracle(const LocalFeatureSet& q, const LocalFeatureSet& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      double ip = 0.0;
      for (std::size_t c = 0; c < q.dim(); ++c) {
        ip += static_cast<double>(q.descriptors(i, c)) * x.descriptors(j, c);
      }
      best = std::max(best, ip);
    }
    total += best;
  }
  return total / static_cast<double>(q.size());
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("l2g_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Code of the l2g::Error thrown by `fn`, or nullopt when it returns.
template <typename Fn>
std::optional<ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace l2g::testing
