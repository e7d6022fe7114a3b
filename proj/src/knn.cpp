#include "rankshift/knn.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "rankshift/parallel.hpp"

namespace rankshift {

struct VectorDataset::Mapping {
  int fd = -1;
  void* ptr = MAP_FAILED;
  std::size_t len = 0;

  ~Mapping() {
    if (ptr != MAP_FAILED) ::munmap(ptr, len);
    if (fd >= 0) ::close(fd);
  }
};

namespace {

std::int32_t read_i32(const std::uint8_t* p) {
  std::int32_t v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

std::size_t element_size(ElementKind k) { return k == ElementKind::f32 ? 4 : 1; }

// Squared Euclidean distance accumulated left to right in float64.  Both the
// scan and the test oracle must use this exact loop so results match bitwise.
template <typename T>
double dist2(const T* a, const T* b, int dim) {
  double acc = 0.0;
  for (int j = 0; j < dim; ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += d * d;
  }
  return acc;
}

struct HeapEntry {
  double d2;
  std::int64_t id;

  bool operator<(const HeapEntry& o) const {  // nearer first, lower id on ties
    if (d2 != o.d2) return d2 < o.d2;
    return id < o.id;
  }
};

template <typename T>
void scan_query(const VectorDataset& data, const T* q, int k, bool exclude_self,
                std::vector<HeapEntry>& heap) {
  heap.clear();
  const std::int64_t n = data.count();
  const int dim = data.dim();
  for (std::int64_t i = 0; i < n; ++i) {
    const T* row;
    if constexpr (std::is_same_v<T, float>)
      row = data.f32_row(i);
    else
      row = data.u8_row(i);
    const double d2v = dist2(q, row, dim);
    if (exclude_self && d2v == 0.0) continue;
    const HeapEntry e{d2v, i};
    if (heap.size() < static_cast<std::size_t>(k)) {
      heap.push_back(e);
      std::push_heap(heap.begin(), heap.end());
    } else if (e < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = e;
      std::push_heap(heap.begin(), heap.end());
    }
  }
  std::sort_heap(heap.begin(), heap.end());
}

}  // namespace

VecFormat parse_format(const std::string& name) {
  if (name == "fvecs") return VecFormat::fvecs;
  if (name == "bvecs") return VecFormat::bvecs;
  if (name == "fbin") return VecFormat::fbin;
  if (name == "u8bin") return VecFormat::u8bin;
  throw DatasetFormatError("unknown vector format: " + name);
}

std::string format_name(VecFormat f) {
  switch (f) {
    case VecFormat::fvecs: return "fvecs";
    case VecFormat::bvecs: return "bvecs";
    case VecFormat::fbin: return "fbin";
    case VecFormat::u8bin: return "u8bin";
  }
  return "?";
}

VectorDataset VectorDataset::load(const std::string& path, VecFormat format) {
  auto mapping = std::make_shared<Mapping>();
  mapping->fd = ::open(path.c_str(), O_RDONLY);
  if (mapping->fd < 0) throw DatasetFormatError("cannot open " + path);
  struct stat st{};
  if (::fstat(mapping->fd, &st) != 0) throw DatasetFormatError("cannot stat " + path);
  mapping->len = static_cast<std::size_t>(st.st_size);
  if (mapping->len == 0) throw DatasetFormatError(path + ": empty file");
  mapping->ptr = ::mmap(nullptr, mapping->len, PROT_READ, MAP_PRIVATE, mapping->fd, 0);
  if (mapping->ptr == MAP_FAILED) throw DatasetFormatError("cannot mmap " + path);
  const auto* bytes = static_cast<const std::uint8_t*>(mapping->ptr);

  VectorDataset ds;
  ds.mapping_ = mapping;
  ds.base_ = bytes;

  const bool per_record_dim = (format == VecFormat::fvecs || format == VecFormat::bvecs);
  ds.kind_ = (format == VecFormat::fvecs || format == VecFormat::fbin) ? ElementKind::f32
                                                                       : ElementKind::u8;
  const std::size_t esz = element_size(ds.kind_);

  if (per_record_dim) {
    if (mapping->len < 4) throw DatasetFormatError(path + ": truncated file");
    const std::int32_t dim = read_i32(bytes);
    if (dim <= 0) throw DatasetFormatError(path + ": record 0 has nonpositive dimension");
    const std::size_t stride = 4 + static_cast<std::size_t>(dim) * esz;
    if (mapping->len % stride != 0)
      throw DatasetFormatError(path + ": truncated file (size not a whole number of records)");
    const std::int64_t count = static_cast<std::int64_t>(mapping->len / stride);
    // Every record must agree on the dimension.
    for (std::int64_t i = 0; i < count; ++i) {
      const std::int32_t d = read_i32(bytes + static_cast<std::size_t>(i) * stride);
      if (d != dim)
        throw DatasetFormatError(path + ": record " + std::to_string(i) +
                                 " has dimension " + std::to_string(d) + ", expected " +
                                 std::to_string(dim));
    }
    ds.dim_ = dim;
    ds.count_ = count;
    ds.stride_ = stride;
    ds.offset_ = 4;
  } else {
    if (mapping->len < 8) throw DatasetFormatError(path + ": truncated file");
    const std::int32_t npts = read_i32(bytes);
    const std::int32_t dim = read_i32(bytes + 4);
    if (npts < 0 || dim <= 0) throw DatasetFormatError(path + ": invalid header");
    const std::size_t expect =
        8 + static_cast<std::size_t>(npts) * static_cast<std::size_t>(dim) * esz;
    if (mapping->len != expect)
      throw DatasetFormatError(path + ": truncated file (header promises " +
                               std::to_string(expect) + " bytes, file has " +
                               std::to_string(mapping->len) + ")");
    ds.dim_ = dim;
    ds.count_ = npts;
    ds.stride_ = static_cast<std::size_t>(dim) * esz;
    ds.offset_ = 0;
    ds.base_ = bytes + 8;
  }
  return ds;
}

VectorDataset VectorDataset::from_floats(int dim, std::vector<float> values) {
  if (dim <= 0) throw std::invalid_argument("VectorDataset: dim must be positive");
  if (values.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("VectorDataset: value count not a multiple of dim");
  VectorDataset ds;
  ds.owned_.resize(values.size() * 4);
  std::memcpy(ds.owned_.data(), values.data(), ds.owned_.size());
  ds.base_ = ds.owned_.data();
  ds.dim_ = dim;
  ds.count_ = static_cast<std::int64_t>(values.size() / static_cast<std::size_t>(dim));
  ds.stride_ = static_cast<std::size_t>(dim) * 4;
  ds.kind_ = ElementKind::f32;
  return ds;
}

VectorDataset VectorDataset::from_bytes(int dim, std::vector<std::uint8_t> values) {
  if (dim <= 0) throw std::invalid_argument("VectorDataset: dim must be positive");
  if (values.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("VectorDataset: value count not a multiple of dim");
  VectorDataset ds;
  ds.owned_ = std::move(values);
  ds.base_ = ds.owned_.data();
  ds.dim_ = dim;
  ds.count_ = static_cast<std::int64_t>(ds.owned_.size() / static_cast<std::size_t>(dim));
  ds.stride_ = static_cast<std::size_t>(dim);
  ds.kind_ = ElementKind::u8;
  return ds;
}

std::vector<TopKResult> exhaustive_knn(const VectorDataset& data, const QuerySet& queries,
                                       int k, const KnnOptions& options) {
  if (k < 1) throw std::invalid_argument("exhaustive_knn: k must be >= 1");
  if (k > data.count())
    throw std::invalid_argument("exhaustive_knn: k exceeds dataset size");
  if (data.dim() != queries.dim())
    throw std::invalid_argument("exhaustive_knn: query dimension " +
                                std::to_string(queries.dim()) + " != dataset dimension " +
                                std::to_string(data.dim()));
  if (data.element_kind() != queries.element_kind())
    throw std::invalid_argument("exhaustive_knn: query and dataset element types differ");

  std::vector<TopKResult> out(static_cast<std::size_t>(queries.count()));
  parallel_for(out.size(), options.threads, [&](std::size_t qi) {
    std::vector<HeapEntry> heap;
    heap.reserve(static_cast<std::size_t>(k));
    if (data.element_kind() == ElementKind::f32)
      scan_query(data, queries.f32_row(static_cast<std::int64_t>(qi)), k,
                 options.exclude_self_matches, heap);
    else
      scan_query(data, queries.u8_row(static_cast<std::int64_t>(qi)), k,
                 options.exclude_self_matches, heap);
    if (heap.size() < static_cast<std::size_t>(k))
      throw std::invalid_argument(
          "exhaustive_knn: fewer than k points remained after self-match exclusion");
    TopKResult& r = out[qi];
    r.query_id = qi;
    r.ids.resize(heap.size());
    r.distances.resize(heap.size());
    for (std::size_t j = 0; j < heap.size(); ++j) {
      r.ids[j] = heap[j].id;
      r.distances[j] = std::sqrt(heap[j].d2);
    }
  });
  return out;
}

ProfileStream profiles_from_results(std::span<const TopKResult> results) {
  ProfileStream out;
  out.profiles.reserve(results.size());
  for (const auto& r : results) {
    if (r.distances.size() < 2) {
      ++out.too_short_dropped;
      continue;
    }
    bool has_zero = false;
    for (double d : r.distances)
      if (d == 0.0) { has_zero = true; break; }
    if (has_zero) {
      ++out.zero_distance_dropped;
      continue;
    }
    out.profiles.emplace_back(r.query_id, r.distances);
  }
  return out;
}

void write_topk_csv(const std::string& path, std::span<const TopKResult> results) {
  std::ofstream f(path, std::ios::binary);  // binary: byte-stable line endings
  if (!f) throw DatasetFormatError("cannot open for writing: " + path);
  f << "query_id,rank,neighbor_id,distance\n";
  char buf[64];
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.ids.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r.distances[j]);
      f << r.query_id << ',' << (j + 1) << ',' << r.ids[j] << ',' << buf << '\n';
    }
  }
  if (!f) throw DatasetFormatError("write failed: " + path);
}

std::vector<TopKResult> read_topk_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DatasetFormatError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("query_id,rank,neighbor_id,distance", 0) != 0)
    throw DatasetFormatError(path + ": missing top-k CSV header");
  std::vector<TopKResult> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    std::uint64_t qid;
    std::int64_t rank, nid;
    double dist;
    auto eat = [&](auto& value) {
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc())
        throw DatasetFormatError(path + ": parse error on line " + std::to_string(lineno));
      p = next;
      if (p < end && *p == ',') ++p;
    };
    eat(qid);
    eat(rank);
    eat(nid);
    {
      char* next = nullptr;
      dist = std::strtod(p, &next);
      if (next == p)
        throw DatasetFormatError(path + ": parse error on line " + std::to_string(lineno));
    }
    if (out.empty() || out.back().query_id != qid) {
      out.push_back(TopKResult{qid, {}, {}});
    }
    if (rank != static_cast<std::int64_t>(out.back().ids.size()) + 1)
      throw DatasetFormatError(path + ": rank out of order on line " + std::to_string(lineno));
    out.back().ids.push_back(nid);
    out.back().distances.push_back(dist);
  }
  return out;
}

void write_topk_binary(const std::string& path, std::span<const TopKResult> results) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DatasetFormatError("cannot open for writing: " + path);
  const char magic[8] = {'t', 'o', 'p', 'k', 'b', 'i', 'n', '1'};
  f.write(magic, 8);
  const auto nq = static_cast<std::uint64_t>(results.size());
  f.write(reinterpret_cast<const char*>(&nq), 8);
  for (const auto& r : results) {
    const auto k = static_cast<std::uint32_t>(r.ids.size());
    f.write(reinterpret_cast<const char*>(&r.query_id), 8);
    f.write(reinterpret_cast<const char*>(&k), 4);
    f.write(reinterpret_cast<const char*>(r.ids.data()), static_cast<std::streamsize>(8 * k));
    f.write(reinterpret_cast<const char*>(r.distances.data()),
            static_cast<std::streamsize>(8 * k));
  }
  if (!f) throw DatasetFormatError("write failed: " + path);
}

std::vector<TopKResult> read_topk_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DatasetFormatError("cannot open: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "topkbin1", 8) != 0)
    throw DatasetFormatError(path + ": not a top-k binary table");
  std::uint64_t nq = 0;
  f.read(reinterpret_cast<char*>(&nq), 8);
  std::vector<TopKResult> out(nq);
  for (auto& r : out) {
    std::uint32_t k = 0;
    f.read(reinterpret_cast<char*>(&r.query_id), 8);
    f.read(reinterpret_cast<char*>(&k), 4);
    r.ids.resize(k);
    r.distances.resize(k);
    f.read(reinterpret_cast<char*>(r.ids.data()), static_cast<std::streamsize>(8 * k));
    f.read(reinterpret_cast<char*>(r.distances.data()), static_cast<std::streamsize>(8 * k));
    if (!f) throw DatasetFormatError(path + ": truncated top-k binary table");
  }
  return out;
}

}  // namespace rankshift
