#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "hint/geom.hpp"

namespace hint {

// One pyramid level: sorted voxel coordinates at level d plus the 8-bit
// occupancy code of each voxel's 2x2x2 child cell. A retained voxel always
// has at least one occupied child, so codes are in 1..255.
struct SparseLevel {
  int level = 0;
  SortedVoxelSet coords;  // codes stored as the set's payload

  size_t size() const { return coords.size(); }
  const std::vector<uint8_t>& codes() const { return coords.codes(); }
};

// Children emitted by expanding one level, plus the alignment metadata the
// entropy model needs: which parent row each child came from and the child's
// index (low three coordinate bits) inside that parent.
struct UpscaleResult {
  SortedVoxelSet coords;                 // level d+1, sorted
  std::vector<uint32_t> parent_of;       // child row -> parent row
  std::vector<uint8_t> child_index;      // child row -> index in [0, 8)
};

// Parent coords are the child coords shifted down one bit; each parent code
// has bit i set iff the child with low bits i = b_x + 2*b_y + 4*b_z exists.
inline SparseLevel downscale(const SortedVoxelSet& child_coords) {
  require(!child_coords.empty(), ErrorKind::invalid_argument, "downscale: empty child level");
  const auto& keys = child_coords.keys();
  std::vector<MortonKey> parent_keys;
  std::vector<uint8_t> codes;
  parent_keys.reserve(keys.size());
  codes.reserve(keys.size());
  for (MortonKey k : keys) {
    MortonKey pk = k >> 3;
    uint8_t bit = uint8_t(1u << (k & 7));
    if (!parent_keys.empty() && parent_keys.back() == pk) {
      codes.back() |= bit;
    } else {
      parent_keys.push_back(pk);
      codes.push_back(bit);
    }
  }
  SparseLevel out;
  out.level = child_coords.depth() - 1;
  out.coords = SortedVoxelSet::from_sorted_keys(std::move(parent_keys), child_coords.depth() - 1,
                                                std::move(codes));
  return out;
}

inline UpscaleResult upscale(const SparseLevel& parent) {
  const auto& keys = parent.coords.keys();
  const auto& codes = parent.codes();
  require(keys.size() == codes.size(), ErrorKind::invalid_argument, "upscale: level has no codes");
  UpscaleResult out;
  size_t total = 0;
  for (uint8_t c : codes) total += size_t(std::popcount(c));
  std::vector<MortonKey> child_keys;
  child_keys.reserve(total);
  out.parent_of.reserve(total);
  out.child_index.reserve(total);
  for (size_t p = 0; p < keys.size(); ++p) {
    require(codes[p] != 0, ErrorKind::corrupt_stream, "upscale: occupancy code 0 at row " + std::to_string(p));
    MortonKey base = keys[p] << 3;
    for (uint8_t i = 0; i < 8; ++i) {
      if (codes[p] & (1u << i)) {
        child_keys.push_back(base | i);
        out.parent_of.push_back(uint32_t(p));
        out.child_index.push_back(i);
      }
    }
  }
  out.coords = SortedVoxelSet::from_sorted_keys(std::move(child_keys), parent.level + 1);
  return out;
}

// Full hierarchy for one frame: coded levels 0..D-1 plus the leaf set at
// level D. levels[d+1] always equals the expansion of levels[d].
struct FramePyramid {
  int depth = 0;                    // D
  std::vector<SparseLevel> levels;  // levels[d] for d = 0..D-1
  SortedVoxelSet leaves;            // level D

  uint64_t content_hash() const {
    uint64_t h = fnv1a_u64(uint64_t(depth), kFnvOffset);
    for (const auto& l : levels) h = fnv1a_u64(l.coords.content_hash(), h);
    return fnv1a_u64(leaves.content_hash(), h);
  }
};

inline FramePyramid build_pyramid(const SortedVoxelSet& leaf_coords, int depth) {
  require(depth >= 1 && depth <= kMaxDepth, ErrorKind::invalid_argument,
          "pyramid depth must be in [1, " + std::to_string(kMaxDepth) + "]");
  require(!leaf_coords.empty(), ErrorKind::invalid_argument, "build_pyramid: empty leaf set");
  require(leaf_coords.depth() == depth, ErrorKind::invalid_argument,
          "leaf set depth " + std::to_string(leaf_coords.depth()) +
              " does not match pyramid depth " + std::to_string(depth));

  FramePyramid pyr;
  pyr.depth = depth;
  pyr.leaves = leaf_coords;
  pyr.levels.resize(size_t(depth));
  const SortedVoxelSet* cur = &leaf_coords;
  for (int d = depth - 1; d >= 0; --d) {
    pyr.levels[size_t(d)] = downscale(*cur);
    cur = &pyr.levels[size_t(d)].coords;  // payload ignored by the next downscale
  }
  return pyr;
}

// Chains upscale from the top level down and returns the leaf set. Verifies
// that each expansion matches the stored next level.
inline SortedVoxelSet reconstruct_pyramid(const std::vector<SparseLevel>& levels) {
  require(!levels.empty(), ErrorKind::invalid_argument, "reconstruct_pyramid: no levels");
  for (size_t d = 0; d + 1 < levels.size(); ++d) {
    UpscaleResult up = upscale(levels[d]);
    require(up.coords.keys() == levels[d + 1].coords.keys(), ErrorKind::corrupt_stream,
            "pyramid inconsistency between levels " + std::to_string(d) + " and " +
                std::to_string(d + 1));
  }
  return upscale(levels.back()).coords;
}

}  // namespace hint
