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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace l2g {

enum class ErrorCode {
  kInvalidArgument,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedFile,
  kDimensionMismatch,
  kZeroNormDescriptor,
  kUnnormalizedDescriptor,
  kDuplicateId,
  kEmptyDescriptorSet,
  kIoFailure,
  kEmptyDatabase,
  kKTooLarge,
  kEigenFailure,
  kDegenerateWeights,
  kNonFinite,
  kMissingGlobals,
  kOverlappingGtSets,
  kSchemaViolation,
  kUnknownId,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroNormDescriptor: return "ZeroNormDescriptor";
    case ErrorCode::kUnnormalizedDescriptor: return "UnnormalizedDescriptor";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyDescriptorSet: return "EmptyDescriptorSet";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kEmptyDatabase: return "EmptyDatabase";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kDegenerateWeights: return "DegenerateWeights";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kMissingGlobals: return "MissingGlobals";
    case ErrorCode::kOverlappingGtSets: return "OverlappingGtSets";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kUnknownId: return "UnknownId";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

// ---------------------------------------------------------------------------
// Seeded randomness: splitmix64 words with hand-written distributions, so
// generated data does not depend on the standard library in use.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ULL) {
    // splitmix64 seeding, so nearby seeds give unrelated streams.
    for (auto& word : pool_) word = splitmix();
    index_ = 0;
  }

  std::uint64_t next_u64() {
    if (index_ == pool_.size()) refill();
    return pool_[index_++];
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Lemire-style rejection keeps the mapping unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::uint64_t splitmix() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  void refill() {
    for (auto& word : pool_) word = splitmix();
    index_ = 0;
  }

  std::uint64_t state_;
  std::array<std::uint64_t, 64> pool_{};
  std::size_t index_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Threading. Work items write to disjoint slots, so results never depend on
// the schedule.

inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("L2G_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<std::size_t>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Little-endian binary framing shared by the L2GF/L2GG/L2GI/L2GD/L2GS files.

namespace io {

template <typename T>
T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { raw(tag.data(), tag.size()); }
  void u32(std::uint32_t value) { pod(value); }
  void f32(float value) { pod(value); }
  void bytes(std::string_view data) { raw(data.data(), data.size()); }

  void floats(const float* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(reinterpret_cast<const char*>(data), count * sizeof(float));
    } else {
      for (std::size_t i = 0; i < count; ++i) f32(data[i]);
    }
  }

  void check() const {
    if (!out_) fail(ErrorCode::kIoFailure, "write failed");
  }

 private:
  template <typename T>
  void pod(T value) {
    value = byteswap_if_needed(value);
    raw(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void raw(const char* data, std::size_t size) {
    out_.write(data, static_cast<std::streamsize>(size));
  }

  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (in_.gcount() != static_cast<std::streamsize>(tag.size()) || got != tag) {
      fail(ErrorCode::kBadMagic, source_ + ": expected magic \"" + std::string(tag) + "\"");
    }
  }

  std::uint32_t u32() { return pod<std::uint32_t>(); }
  float f32() { return pod<float>(); }

  std::string bytes(std::size_t size) {
    std::string data(size, '\0');
    raw(data.data(), size);
    return data;
  }

  void floats(float* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(reinterpret_cast<char*>(data), count * sizeof(float));
    } else {
      for (std::size_t i = 0; i < count; ++i) data[i] = f32();
    }
  }

  // True when the stream has no further bytes.
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::string& source() const { return source_; }

 private:
  template <typename T>
  T pod() {
    T value;
    raw(reinterpret_cast<char*>(&value), sizeof(T));
    return byteswap_if_needed(value);
  }

  void raw(char* data, std::size_t size) {
    in_.read(data, static_cast<std::streamsize>(size));
    if (in_.gcount() != static_cast<std::streamsize>(size)) {
      fail(ErrorCode::kTruncatedFile, source_ + ": unexpected end of file");
    }
  }

  std::istream& in_;
  std::string source_;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot open " + path + " for writing");
  return out;
}

}  // namespace io
}  // namespace l2g
