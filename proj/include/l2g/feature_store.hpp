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

// Local and global descriptor containers plus their on-disk formats.
//
// L2GF (local features), little-endian:
//   "L2GF" | u32 version=1 | u32 image_count | u32 dim
//   per image: u32 id_len | id bytes (UTF-8) | u32 n | n*dim f32 (row-major)
//
// L2GG (global features) uses the same framing with n fixed to 1.
//
// Descriptors are unit-normalized at load: rows within 1e-4 of unit norm
// are kept bit-exact, rows within 1e-2 are renormalized, anything further
// off is rejected.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "l2g/common.hpp"

namespace l2g {

using DescriptorMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr double kKeepNormTolerance = 1e-4;
inline constexpr double kRenormalizeTolerance = 1e-2;
inline constexpr std::size_t kDefaultMaxDescriptors = 600;

struct LocalFeatureSet {
  std::string image_id;
  DescriptorMatrix descriptors;  // one unit-norm descriptor per row

  std::size_t size() const { return static_cast<std::size_t>(descriptors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(descriptors.cols()); }
  std::span<const float> row(std::size_t i) const {
    return {descriptors.data() + i * dim(), dim()};
  }
};

struct GlobalFeature {
  std::string image_id;
  Eigen::VectorXf vector;
};

// Brings every row to unit norm under the tolerance rule in the file
// comment. Throws ZeroNormDescriptor / UnnormalizedDescriptor.
inline void normalize_rows(DescriptorMatrix& rows, const std::string& context) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    double sq = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const double v = rows(r, c);
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      fail(ErrorCode::kZeroNormDescriptor,
           context + ": descriptor " + std::to_string(r) + " has zero or non-finite norm");
    }
    const double deviation = std::abs(norm - 1.0);
    if (deviation <= kKeepNormTolerance) continue;
    if (deviation > kRenormalizeTolerance) {
      fail(ErrorCode::kUnnormalizedDescriptor,
           context + ": descriptor " + std::to_string(r) + " has norm " + std::to_string(norm));
    }
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      rows(r, c) = static_cast<float>(rows(r, c) / norm);
    }
  }
}

// Ordered, id-unique list of local feature sets sharing one dimension.
// Immutable once handed to an index.
class FeatureCollection {
 public:
  FeatureCollection() = default;

  explicit FeatureCollection(std::vector<LocalFeatureSet> sets) {
    sets_.reserve(sets.size());
    for (auto& set : sets) add(std::move(set));
  }

  void add(LocalFeatureSet set) {
    if (set.size() == 0) {
      fail(ErrorCode::kEmptyDescriptorSet, "image '" + set.image_id + "' has no descriptors");
    }
    if (sets_.empty() && dim_ == 0) {
      require(set.dim() >= 2, ErrorCode::kDimensionMismatch,
              "descriptor dimension must be at least 2");
      dim_ = set.dim();
    } else if (set.dim() != dim_) {
      fail(ErrorCode::kDimensionMismatch,
           "image '" + set.image_id + "' has dimension " + std::to_string(set.dim()) +
               ", collection has " + std::to_string(dim_));
    }
    const auto ordinal = static_cast<std::uint32_t>(sets_.size());
    if (!by_id_.emplace(set.image_id, ordinal).second) {
      fail(ErrorCode::kDuplicateId, "duplicate image id '" + set.image_id + "'");
    }
    total_descriptors_ += set.size();
    sets_.push_back(std::move(set));
  }

  // Appends every set of `other`, keeping its order.
  void append(const FeatureCollection& other) {
    for (const auto& set : other) add(set);
  }

  std::size_t size() const { return sets_.size(); }
  bool empty() const { return sets_.empty(); }
  std::size_t dim() const { return dim_; }
  std::size_t total_descriptors() const { return total_descriptors_; }

  const LocalFeatureSet& operator[](std::size_t i) const { return sets_[i]; }
  std::vector<LocalFeatureSet>::const_iterator begin() const { return sets_.begin(); }
  std::vector<LocalFeatureSet>::const_iterator end() const { return sets_.end(); }

  std::optional<std::uint32_t> find(const std::string& image_id) const {
    const auto it = by_id_.find(image_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t ordinal_of(const std::string& image_id) const {
    const auto found = find(image_id);
    if (!found) fail(ErrorCode::kUnknownId, "unknown image id '" + image_id + "'");
    return *found;
  }

 private:
  std::vector<LocalFeatureSet> sets_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
  std::size_t dim_ = 0;
  std::size_t total_descriptors_ = 0;
};

// Global descriptors keyed by image id; rows are unit-norm.
class GlobalFeatureStore {
 public:
  GlobalFeatureStore() = default;

  explicit GlobalFeatureStore(const std::vector<GlobalFeature>& features) {
    if (features.empty()) return;
    const auto dim = features.front().vector.size();
    require(dim >= 2, ErrorCode::kDimensionMismatch, "global dimension must be at least 2");
    vectors_.resize(static_cast<Eigen::Index>(features.size()), dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      if (f.vector.size() != dim) {
        fail(ErrorCode::kDimensionMismatch, "global feature '" + f.image_id + "' has wrong dimension");
      }
      if (!by_id_.emplace(f.image_id, static_cast<std::uint32_t>(i)).second) {
        fail(ErrorCode::kDuplicateId, "duplicate global feature id '" + f.image_id + "'");
      }
      ids_.push_back(f.image_id);
      vectors_.row(static_cast<Eigen::Index>(i)) = f.vector.transpose();
    }
    normalize_rows(vectors_, "global features");
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const DescriptorMatrix& vectors() const { return vectors_; }

  std::optional<std::uint32_t> find(const std::string& image_id) const {
    const auto it = by_id_.find(image_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  GlobalFeature at(std::size_t i) const {
    return {ids_[i], vectors_.row(static_cast<Eigen::Index>(i)).transpose()};
  }

  // Rows reordered to match the ordinals of `collection`.
  DescriptorMatrix aligned_to(const FeatureCollection& collection) const {
    DescriptorMatrix out(static_cast<Eigen::Index>(collection.size()), vectors_.cols());
    for (std::size_t i = 0; i < collection.size(); ++i) {
      const auto found = find(collection[i].image_id);
      if (!found) {
        fail(ErrorCode::kMissingGlobals, "no global feature for '" + collection[i].image_id + "'");
      }
      out.row(static_cast<Eigen::Index>(i)) = vectors_.row(*found);
    }
    return out;
  }

  // Appends `other`; ids must stay unique.
  void append(const GlobalFeatureStore& other) {
    std::vector<GlobalFeature> all;
    all.reserve(size() + other.size());
    for (std::size_t i = 0; i < size(); ++i) all.push_back(at(i));
    for (std::size_t i = 0; i < other.size(); ++i) all.push_back(other.at(i));
    *this = GlobalFeatureStore(all);
  }

 private:
  std::vector<std::string> ids_;
  DescriptorMatrix vectors_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
};

struct LoadOptions {
  // Rows beyond this count are dropped at load; 0 keeps everything.
  std::size_t max_descriptors = kDefaultMaxDescriptors;
};

namespace detail {

struct FramedRecord {
  std::string id;
  DescriptorMatrix rows;
};

inline std::uintmax_t stream_size(std::istream& in) {
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(here);
  return static_cast<std::uintmax_t>(size);
}

// Reads the shared L2GF/L2GG framing. `fixed_count` forces n per record.
template <typename Visit>
void read_framed(std::istream& in, const std::string& source, std::string_view magic,
                 std::optional<std::uint32_t> fixed_count, Visit&& visit) {
  const std::uintmax_t file_size = stream_size(in);
  io::Reader reader(in, source);
  reader.expect_magic(magic);
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion) {
    fail(ErrorCode::kVersionUnsupported, source + ": version " + std::to_string(version));
  }
  const std::uint32_t count = reader.u32();
  const std::uint32_t dim = reader.u32();
  if (count > 0 && dim < 2) {
    fail(ErrorCode::kDimensionMismatch, source + ": descriptor dimension " + std::to_string(dim));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = reader.u32();
    if (id_len > file_size) fail(ErrorCode::kTruncatedFile, source + ": id length exceeds file");
    FramedRecord record;
    record.id = reader.bytes(id_len);
    const std::uint32_t n = reader.u32();
    if (fixed_count && n != *fixed_count) {
      fail(ErrorCode::kDimensionMismatch,
           source + ": record '" + record.id + "' has " + std::to_string(n) + " rows");
    }
    if (static_cast<std::uintmax_t>(n) * dim * sizeof(float) > file_size) {
      fail(ErrorCode::kTruncatedFile, source + ": descriptor block exceeds file size");
    }
    record.rows.resize(n, dim);
    reader.floats(record.rows.data(), static_cast<std::size_t>(n) * dim);
    visit(std::move(record));
  }
}

inline void write_framed_header(io::Writer& writer, std::string_view magic, std::size_t count,
                                std::size_t dim) {
  writer.magic(magic);
  writer.u32(kFormatVersion);
  writer.u32(static_cast<std::uint32_t>(count));
  writer.u32(static_cast<std::uint32_t>(dim));
}

inline void write_record(io::Writer& writer, const std::string& id, const float* data,
                         std::size_t rows, std::size_t dim) {
  writer.u32(static_cast<std::uint32_t>(id.size()));
  writer.bytes(id);
  writer.u32(static_cast<std::uint32_t>(rows));
  writer.floats(data, rows * dim);
}

}  // namespace detail

inline FeatureCollection read_collection(std::istream& in, const std::string& source,
                                         const LoadOptions& options = {}) {
  FeatureCollection collection;
  detail::read_framed(in, source, "L2GF", std::nullopt, [&](detail::FramedRecord record) {
    if (record.rows.rows() == 0) {
      fail(ErrorCode::kEmptyDescriptorSet, source + ": image '" + record.id + "' has no descriptors");
    }
    if (options.max_descriptors > 0 &&
        static_cast<std::size_t>(record.rows.rows()) > options.max_descriptors) {
      record.rows.conservativeResize(static_cast<Eigen::Index>(options.max_descriptors),
                                     Eigen::NoChange);
    }
    normalize_rows(record.rows, source + ":" + record.id);
    collection.add({std::move(record.id), std::move(record.rows)});
  });
  return collection;
}

inline FeatureCollection load_collection(const std::string& path, const LoadOptions& options = {}) {
  auto in = io::open_input(path);
  return read_collection(in, path, options);
}

inline void write_collection(const FeatureCollection& collection, std::ostream& out) {
  io::Writer writer(out);
  detail::write_framed_header(writer, "L2GF", collection.size(), collection.dim());
  for (const auto& set : collection) {
    detail::write_record(writer, set.image_id, set.descriptors.data(), set.size(), set.dim());
  }
  writer.check();
}

inline void save_collection(const FeatureCollection& collection, const std::string& path) {
  // FeatureCollection enforces n >= 1 on insertion, so nothing invalid
  // reaches the writer.
  auto out = io::open_output(path);
  write_collection(collection, out);
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

inline GlobalFeatureStore load_globals(const std::string& path) {
  auto in = io::open_input(path);
  std::vector<GlobalFeature> features;
  detail::read_framed(in, path, "L2GG", 1u, [&](detail::FramedRecord record) {
    features.push_back({std::move(record.id), record.rows.row(0).transpose()});
  });
  return GlobalFeatureStore(features);
}

inline void save_globals(const GlobalFeatureStore& store, const std::string& path) {
  auto out = io::open_output(path);
  io::Writer writer(out);
  detail::write_framed_header(writer, "L2GG", store.size(), store.dim());
  for (std::size_t i = 0; i < store.size(); ++i) {
    detail::write_record(writer, store.ids()[i],
                         store.vectors().data() + i * store.dim(), 1, store.dim());
  }
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

// ---------------------------------------------------------------------------
// Dataset manifest: JSON listing the feature files of each split. Relative
// paths resolve against the manifest's directory.
//
//   { "database": ["db.l2gf"], "distractors": ["d.l2gf"],
//     "queries": ["q.l2gf"], "database_globals": ["db.l2gg", "d.l2gg"],
//     "query_globals": ["q.l2gg"], "ground_truth": "gt.json" }

struct DatasetManifest {
  std::vector<std::string> database;
  std::vector<std::string> distractors;
  std::vector<std::string> queries;
  std::vector<std::string> database_globals;
  std::vector<std::string> query_globals;
  std::string ground_truth;
};

inline DatasetManifest load_manifest(const std::string& path) {
  auto in = io::open_input(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path candidate(p);
    return candidate.is_absolute() ? candidate.string() : (base / candidate).string();
  };
  const auto list = [&](const char* key) {
    std::vector<std::string> out;
    if (!doc.contains(key)) return out;
    const auto& value = doc.at(key);
    if (value.is_string()) {
      out.push_back(resolve(value.get<std::string>()));
    } else if (value.is_array()) {
      for (const auto& item : value) {
        if (!item.is_string()) fail(ErrorCode::kSchemaViolation, path + ": '" + key + "' must hold strings");
        out.push_back(resolve(item.get<std::string>()));
      }
    } else {
      fail(ErrorCode::kSchemaViolation, path + ": '" + key + "' must be a string or array");
    }
    return out;
  };
  if (!doc.is_object()) fail(ErrorCode::kSchemaViolation, path + ": manifest must be an object");
  DatasetManifest manifest;
  manifest.database = list("database");
  manifest.distractors = list("distractors");
  manifest.queries = list("queries");
  manifest.database_globals = list("database_globals");
  manifest.query_globals = list("query_globals");
  const auto gt = list("ground_truth");
  if (!gt.empty()) manifest.ground_truth = gt.front();
  if (manifest.database.empty()) fail(ErrorCode::kSchemaViolation, path + ": 'database' is required");
  return manifest;
}

inline void save_manifest(const nlohmann::json& doc, const std::string& path) {
  auto out = io::open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

// Database split = database files followed by distractor files, in order.
inline FeatureCollection load_database(const DatasetManifest& manifest,
                                       const LoadOptions& options = {}) {
  FeatureCollection db;
  for (const auto& p : manifest.database) db.append(load_collection(p, options));
  for (const auto& p : manifest.distractors) db.append(load_collection(p, options));
  return db;
}

inline FeatureCollection load_queries(const DatasetManifest& manifest,
                                      const LoadOptions& options = {}) {
  FeatureCollection queries;
  for (const auto& p : manifest.queries) queries.append(load_collection(p, options));
  return queries;
}

inline GlobalFeatureStore load_global_files(const std::vector<std::string>& paths) {
  GlobalFeatureStore store;
  for (const auto& p : paths) {
    if (store.empty()) {
      store = load_globals(p);
    } else {
      store.append(load_globals(p));
    }
  }
  return store;
}

}  // namespace l2g
