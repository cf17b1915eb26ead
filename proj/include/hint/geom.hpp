#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "hint/common.hpp"

namespace hint {

// Integer voxel position at some pyramid level. Components of a level-d voxel
// lie in [0, 2^d).
struct Voxel {
  uint32_t x = 0, y = 0, z = 0;

  friend bool operator==(const Voxel&, const Voxel&) = default;
};

using MortonKey = uint64_t;

constexpr int kMaxDepth = 21;  // 3*21 = 63 interleaved bits in a 64-bit key

namespace detail {

// Spreads the low 21 bits of v so bit k lands at position 3k.
inline uint64_t spread3(uint64_t v) {
  v &= 0x1fffff;
  v = (v | (v << 32)) & 0x1f00000000ffffull;
  v = (v | (v << 16)) & 0x1f0000ff0000ffull;
  v = (v | (v << 8)) & 0x100f00f00f00f00full;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ull;
  v = (v | (v << 2)) & 0x1249249249249249ull;
  return v;
}

inline uint32_t compact3(uint64_t v) {
  v &= 0x1249249249249249ull;
  v = (v | (v >> 2)) & 0x10c30c30c30c30c3ull;
  v = (v | (v >> 4)) & 0x100f00f00f00f00full;
  v = (v | (v >> 8)) & 0x1f0000ff0000ffull;
  v = (v | (v >> 16)) & 0x1f00000000ffffull;
  v = (v | (v >> 32)) & 0x1fffff;
  return uint32_t(v);
}

}  // namespace detail

// Interleaved-bit key: x occupies bit 0 of each triplet, y bit 1, z bit 2.
// With this layout the child index inside a parent cell is the key's low
// three bits, i = b_x + 2*b_y + 4*b_z.
inline MortonKey morton_encode(const Voxel& v, int depth) {
  require(depth >= 0 && depth <= kMaxDepth, ErrorKind::invalid_argument,
          "depth must be in [0, " + std::to_string(kMaxDepth) + "]");
  uint32_t limit = 1u << depth;
  require(v.x < limit && v.y < limit && v.z < limit, ErrorKind::invalid_argument,
          "voxel component exceeds bit budget at depth " + std::to_string(depth));
  return detail::spread3(v.x) | (detail::spread3(v.y) << 1) | (detail::spread3(v.z) << 2);
}

inline Voxel morton_decode(MortonKey k, int depth) {
  require(depth >= 0 && depth <= kMaxDepth, ErrorKind::invalid_argument,
          "depth must be in [0, " + std::to_string(kMaxDepth) + "]");
  require((k >> (3 * depth)) == 0, ErrorKind::invalid_argument,
          "key exceeds bit budget at depth " + std::to_string(depth));
  return Voxel{detail::compact3(k), detail::compact3(k >> 1), detail::compact3(k >> 2)};
}

// Strictly increasing Morton keys plus optional per-voxel 8-bit codes.
// Immutable after construction; lookups are pure.
class SortedVoxelSet {
public:
  SortedVoxelSet() = default;

  // Duplicates in the input are collapsed; conflicting payload on duplicates
  // is an error.
  static SortedVoxelSet build(const std::vector<Voxel>& voxels, int depth,
                              const std::vector<uint8_t>* payload = nullptr) {
    if (payload)
      require(payload->size() == voxels.size(), ErrorKind::invalid_argument,
              "payload length does not match voxel count");
    std::vector<std::pair<MortonKey, uint8_t>> items(voxels.size());
    for (size_t i = 0; i < voxels.size(); ++i)
      items[i] = {morton_encode(voxels[i], depth), payload ? (*payload)[i] : 0};
    std::sort(items.begin(), items.end());

    SortedVoxelSet out;
    out.depth_ = depth;
    out.keys_.reserve(items.size());
    if (payload) out.codes_.reserve(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
      if (!out.keys_.empty() && out.keys_.back() == items[i].first) {
        if (payload)
          require(out.codes_.back() == items[i].second, ErrorKind::invalid_argument,
                  "duplicate voxel with conflicting payload");
        continue;
      }
      out.keys_.push_back(items[i].first);
      if (payload) out.codes_.push_back(items[i].second);
    }
    return out;
  }

  static SortedVoxelSet from_sorted_keys(std::vector<MortonKey> keys, int depth,
                                         std::vector<uint8_t> codes = {}) {
    SortedVoxelSet out;
    out.keys_ = std::move(keys);
    out.codes_ = std::move(codes);
    out.depth_ = depth;
    require(out.codes_.empty() || out.codes_.size() == out.keys_.size(),
            ErrorKind::invalid_argument, "payload length does not match key count");
    for (size_t i = 1; i < out.keys_.size(); ++i)
      require(out.keys_[i - 1] < out.keys_[i], ErrorKind::invalid_argument,
              "keys not strictly increasing");
    return out;
  }

  size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  int depth() const { return depth_; }
  const std::vector<MortonKey>& keys() const { return keys_; }
  bool has_codes() const { return !codes_.empty(); }
  const std::vector<uint8_t>& codes() const { return codes_; }
  Voxel voxel_at(size_t i) const { return morton_decode(keys_[i], depth_); }

  // Index of key, or -1 when absent.
  ptrdiff_t find_key(MortonKey k) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    if (it == keys_.end() || *it != k) return -1;
    return it - keys_.begin();
  }

  struct Hit {
    bool found = false;
    uint8_t code = 0;
  };

  // Total on any integer query: out-of-range coordinates resolve to
  // not-found. A found voxel without payload reports code 0.
  Hit lookup(int64_t x, int64_t y, int64_t z) const {
    int64_t limit = int64_t(1) << depth_;
    if (x < 0 || y < 0 || z < 0 || x >= limit || y >= limit || z >= limit) return {};
    MortonKey k = morton_encode(Voxel{uint32_t(x), uint32_t(y), uint32_t(z)}, depth_);
    ptrdiff_t idx = find_key(k);
    if (idx < 0) return {};
    return {true, codes_.empty() ? uint8_t(0) : codes_[size_t(idx)]};
  }

  uint64_t content_hash() const {
    uint64_t h = fnv1a_u64(uint64_t(depth_), kFnvOffset);
    h = fnv1a(keys_.data(), keys_.size() * sizeof(MortonKey), h);
    h = fnv1a(codes_.data(), codes_.size(), h);
    return h;
  }

  friend bool operator==(const SortedVoxelSet& a, const SortedVoxelSet& b) {
    return a.depth_ == b.depth_ && a.keys_ == b.keys_ && a.codes_ == b.codes_;
  }

private:
  std::vector<MortonKey> keys_;
  std::vector<uint8_t> codes_;
  int depth_ = 0;
};

struct Offset3 {
  int8_t dx = 0, dy = 0, dz = 0;
};

// Fixed offset window. The order is frozen (lexicographic over (dz, dy, dx),
// ascending) because it defines model input channel order; encoder and
// decoder must agree on it. See docs/FORMAT.md.
struct NeighborhoodSpec {
  int size = 0;  // 7, 27, or 125
  std::vector<Offset3> offsets;

  static NeighborhoodSpec make(int v) {
    NeighborhoodSpec spec;
    spec.size = v;
    int r;
    switch (v) {
      case 7:
      case 27:
        r = 1;
        break;
      case 125:
        r = 2;
        break;
      default:
        raise(ErrorKind::invalid_argument, "neighborhood size must be 7, 27, or 125");
    }
    for (int dz = -r; dz <= r; ++dz)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (v == 7 && std::abs(dx) + std::abs(dy) + std::abs(dz) > 1) continue;
          spec.offsets.push_back({int8_t(dx), int8_t(dy), int8_t(dz)});
        }
    return spec;
  }
};

// center + delta for every offset, in spec order. Out-of-range results are
// kept; lookup resolves them to not-found.
inline std::vector<std::array<int64_t, 3>> expand_neighborhood(const Voxel& center,
                                                               const NeighborhoodSpec& spec) {
  std::vector<std::array<int64_t, 3>> out;
  out.reserve(spec.offsets.size());
  for (const auto& d : spec.offsets)
    out.push_back({int64_t(center.x) + d.dx, int64_t(center.y) + d.dy, int64_t(center.z) + d.dz});
  return out;
}

struct LookupResult {
  std::vector<uint8_t> found;
  std::vector<uint8_t> code;
};

inline LookupResult lookup_batch(const SortedVoxelSet& set,
                                 const std::vector<std::array<int64_t, 3>>& queries) {
  LookupResult r;
  r.found.resize(queries.size());
  r.code.resize(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) {
    auto hit = set.lookup(queries[i][0], queries[i][1], queries[i][2]);
    r.found[i] = hit.found ? 1 : 0;
    r.code[i] = hit.code;
  }
  return r;
}

}  // namespace hint
