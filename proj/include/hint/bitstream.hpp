#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hint/common.hpp"

namespace hint {

// One coded frame: fixed header, root block (level-0 cells stored raw),
// per-level voxel counts for validation, then the range-coded payload.
// Layout is frozen in docs/FORMAT.md; all integers little-endian.

constexpr char kFrameMagic[4] = {'H', 'I', 'N', 'T'};
constexpr uint8_t kFormatVersion = 1;

struct FrameHeader {
  uint8_t version = kFormatVersion;
  bool use_coarse = true;
  bool use_fine = true;
  bool use_sibling = true;
  bool has_prev = false;  // frame was coded against a previous-frame state
  uint8_t vd = 27;        // coarse window size
  uint8_t vfine = 125;    // fine window size
  uint8_t channels = 32;  // feature width
  uint8_t depth = 0;      // pyramid depth D
  uint32_t frame_index = 0;
  uint64_t params_fingerprint = 0;
  uint64_t config_hash = 0;
  // root block: level-0 cells with their occupancy codes, stored raw
  std::vector<uint8_t> root_xyz;    // 3 bytes per root voxel
  std::vector<uint8_t> root_codes;  // 1 byte per root voxel
  // voxel count of every coded level 1..D-1, for early corruption detection
  std::vector<uint32_t> level_counts;
};

inline void write_frame(ByteWriter& w, const FrameHeader& h, const std::vector<uint8_t>& payload) {
  require(h.root_xyz.size() == 3 * h.root_codes.size(), ErrorKind::invalid_argument,
          "root block xyz/code length mismatch");
  w.bytes(kFrameMagic, 4);
  w.u8(h.version);
  uint8_t flags = 0;
  if (h.use_coarse) flags |= 1;
  if (h.use_fine) flags |= 2;
  if (h.use_sibling) flags |= 4;
  if (h.has_prev) flags |= 8;
  w.u8(flags);
  w.u8(h.vd);
  w.u8(h.vfine);
  w.u8(h.channels);
  w.u8(h.depth);
  w.u32(h.frame_index);
  w.u64(h.params_fingerprint);
  w.u64(h.config_hash);
  w.u32(uint32_t(h.root_codes.size()));
  w.bytes(h.root_xyz.data(), h.root_xyz.size());
  w.bytes(h.root_codes.data(), h.root_codes.size());
  w.u8(uint8_t(h.level_counts.size()));
  for (uint32_t c : h.level_counts) w.u32(c);
  w.u64(uint64_t(payload.size()));
  w.bytes(payload.data(), payload.size());
}

struct ParsedFrame {
  FrameHeader header;
  std::vector<uint8_t> payload;
};

inline ParsedFrame read_frame(ByteReader& r) {
  ParsedFrame f;
  char magic[4];
  r.bytes(magic, 4);
  require(std::memcmp(magic, kFrameMagic, 4) == 0, ErrorKind::corrupt_stream,
          "bad magic: not a coded frame");
  FrameHeader& h = f.header;
  h.version = r.u8();
  require(h.version == kFormatVersion, ErrorKind::corrupt_stream,
          "unsupported format version " + std::to_string(h.version));
  uint8_t flags = r.u8();
  require((flags & ~0x0Fu) == 0, ErrorKind::corrupt_stream, "unknown flag bits set");
  h.use_coarse = flags & 1;
  h.use_fine = flags & 2;
  h.use_sibling = flags & 4;
  h.has_prev = flags & 8;
  h.vd = r.u8();
  h.vfine = r.u8();
  h.channels = r.u8();
  h.depth = r.u8();
  require(h.depth >= 1 && h.depth <= 21, ErrorKind::corrupt_stream,
          "depth field out of range: " + std::to_string(int(h.depth)));
  h.frame_index = r.u32();
  h.params_fingerprint = r.u64();
  h.config_hash = r.u64();
  uint32_t roots = r.u32();
  require(roots >= 1 && roots <= (1u << 20), ErrorKind::corrupt_stream,
          "implausible root count " + std::to_string(roots));
  h.root_xyz.resize(size_t(roots) * 3);
  r.bytes(h.root_xyz.data(), h.root_xyz.size());
  h.root_codes.resize(roots);
  r.bytes(h.root_codes.data(), h.root_codes.size());
  for (uint8_t c : h.root_codes)
    require(c != 0, ErrorKind::corrupt_stream, "root occupancy code 0");
  uint8_t n_levels = r.u8();
  require(n_levels == h.depth - 1, ErrorKind::corrupt_stream,
          "level count table holds " + std::to_string(int(n_levels)) + " entries, expected " +
              std::to_string(int(h.depth) - 1));
  h.level_counts.resize(n_levels);
  for (auto& c : h.level_counts) c = r.u32();
  uint64_t payload_bytes = r.u64();
  require(payload_bytes <= r.remaining(), ErrorKind::corrupt_stream,
          "payload truncated: header declares " + std::to_string(payload_bytes) +
              " bytes, stream holds " + std::to_string(r.remaining()));
  f.payload.resize(payload_bytes);
  r.bytes(f.payload.data(), payload_bytes);
  return f;
}

inline size_t header_bytes(const FrameHeader& h) {
  return 4 + 1 + 1 + 1 + 1 + 1 + 1 + 4 + 8 + 8 + 4 + h.root_xyz.size() + h.root_codes.size() + 1 +
         4 * h.level_counts.size() + 8;
}

}  // namespace hint
