#pragma once

// Per-frame statistics rows with a frozen CSV schema. The header line and
// the column formats are stable interface: external tooling parses them.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hint/common.hpp"

namespace hint {

inline constexpr const char* kFrameCsvHeader =
    "frame,points,voxels,header_bits,payload_bits,bpp_payload,bpp_total,encode_ms,decode_ms,"
    "state_hash";

struct FrameRow {
  uint32_t frame = 0;
  uint64_t points = 0;       // source points (voxel count when unknown)
  uint64_t voxels = 0;       // deduplicated voxel count
  uint64_t header_bits = 0;
  uint64_t payload_bits = 0;
  double encode_ms = 0.0;
  double decode_ms = 0.0;
  uint64_t state_hash = 0;

  double bpp_payload() const {
    return points ? double(payload_bits) / double(points) : 0.0;
  }
  double bpp_total() const {
    return points ? double(header_bits + payload_bits) / double(points) : 0.0;
  }
};

inline std::string csv_row(const FrameRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%u,%llu,%llu,%llu,%llu,%.6f,%.6f,%.3f,%.3f,0x%016llx",
                r.frame, (unsigned long long)r.points, (unsigned long long)r.voxels,
                (unsigned long long)r.header_bits, (unsigned long long)r.payload_bits,
                r.bpp_payload(), r.bpp_total(), r.encode_ms, r.decode_ms,
                (unsigned long long)r.state_hash);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<FrameRow>& rows) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::io, "cannot open " + path + " for writing");
  out << kFrameCsvHeader << "\n";
  for (const auto& r : rows) out << csv_row(r) << "\n";
  if (!out) raise(ErrorKind::io, "write failed for " + path);
}

}  // namespace hint
