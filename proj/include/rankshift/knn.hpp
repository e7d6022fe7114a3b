#pragma once

// Exact exhaustive k-nearest-neighbor search over float32/uint8 vector files
// in the common ANN benchmark formats, plus serialization of the results.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankshift/lid.hpp"

namespace rankshift {

// Raised for unreadable, truncated, or internally inconsistent vector files.
class DatasetFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VecFormat { fvecs, bvecs, fbin, u8bin };
enum class ElementKind { f32, u8 };

VecFormat parse_format(const std::string& name);  // "fvecs" | "bvecs" | "fbin" | "u8bin"
std::string format_name(VecFormat f);

// Fixed-dimension vector collection backed either by a memory-mapped file or
// by an owned buffer (synthetic/test data).  Rows are contiguous; fvecs/bvecs
// rows skip their per-record dimension header.
class VectorDataset {
 public:
  static VectorDataset load(const std::string& path, VecFormat format);
  static VectorDataset from_floats(int dim, std::vector<float> values);
  static VectorDataset from_bytes(int dim, std::vector<std::uint8_t> values);

  int dim() const { return dim_; }
  std::int64_t count() const { return count_; }
  ElementKind element_kind() const { return kind_; }

  const float* f32_row(std::int64_t i) const {
    return reinterpret_cast<const float*>(row_ptr(i));
  }
  const std::uint8_t* u8_row(std::int64_t i) const { return row_ptr(i); }

 private:
  VectorDataset() = default;
  const std::uint8_t* row_ptr(std::int64_t i) const {
    return base_ + static_cast<std::size_t>(i) * stride_ + offset_;
  }

  struct Mapping;  // RAII mmap handle
  std::shared_ptr<Mapping> mapping_;
  std::vector<std::uint8_t> owned_;
  const std::uint8_t* base_ = nullptr;
  std::size_t stride_ = 0;  // bytes between consecutive rows
  std::size_t offset_ = 0;  // bytes to skip at the start of each row
  int dim_ = 0;
  std::int64_t count_ = 0;
  ElementKind kind_ = ElementKind::f32;
};

// Queries share the dataset representation; dimensions are checked when the
// two meet in exhaustive_knn.
using QuerySet = VectorDataset;

// k nearest dataset points of one query, ascending by (distance, id).
struct TopKResult {
  std::uint64_t query_id;
  std::vector<std::int64_t> ids;
  std::vector<double> distances;  // true Euclidean, float64 accumulation

  bool operator==(const TopKResult&) const = default;
};

struct KnnOptions {
  bool exclude_self_matches = false;  // skip exact duplicates (distance 0)
  int threads = 1;
};

// Exact top-k by exhaustive scan.  Distances are accumulated in float64 in
// index order (uint8 data included), ties broken by lower dataset index.
// Results are bit-identical for every thread count.
std::vector<TopKResult> exhaustive_knn(const VectorDataset& data, const QuerySet& queries,
                                       int k, const KnnOptions& options = {});

// NeighborProfiles from search results.  Queries whose profile contains a
// zero distance carry no usable ratio information and are dropped and
// counted instead of constructed.
struct ProfileStream {
  std::vector<NeighborProfile> profiles;
  std::size_t zero_distance_dropped = 0;
  std::size_t too_short_dropped = 0;  // results with fewer than 2 neighbors
};

ProfileStream profiles_from_results(std::span<const TopKResult> results);

// CSV serialization: header `query_id,rank,neighbor_id,distance`, one row per
// neighbor, rank starting at 1, distances round-tripping exactly.
void write_topk_csv(const std::string& path, std::span<const TopKResult> results);
std::vector<TopKResult> read_topk_csv(const std::string& path);

// Compact binary table carrying the same information.
void write_topk_binary(const std::string& path, std::span<const TopKResult> results);
std::vector<TopKResult> read_topk_binary(const std::string& path);

}  // namespace rankshift
