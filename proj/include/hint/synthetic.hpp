#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hint/geom.hpp"

namespace hint {

// Deterministic toy sequences for tests, training runs, and benchmarks.
//
//   still      one shell, repeated unchanged
//   translate  one shell drifting by a fixed integer velocity per frame
//   jitter     one shell with fresh per-point +-1 noise every frame
//   morph      one shell whose radius interpolates between two values
//   random     independent uniform voxels every frame (no structure)
enum class Motion { still, translate, jitter, morph, random };

inline Motion motion_from_name(const std::string& name) {
  if (name == "static" || name == "still") return Motion::still;
  if (name == "translate") return Motion::translate;
  if (name == "jitter") return Motion::jitter;
  if (name == "morph") return Motion::morph;
  if (name == "random") return Motion::random;
  raise(ErrorKind::invalid_argument, "unknown motion kind '" + name + "'");
}

inline std::vector<SortedVoxelSet> make_sequence(Motion kind, int frames, int depth, int points,
                                                 uint64_t seed) {
  require(frames >= 1, ErrorKind::invalid_argument, "frame count must be positive");
  require(depth >= 1 && depth <= kMaxDepth, ErrorKind::invalid_argument, "bad sequence depth");
  require(points >= 1, ErrorKind::invalid_argument, "point count must be positive");
  Rng rng(seed);
  const double grid = double(uint64_t(1) << depth);
  const uint32_t hi = uint32_t((uint64_t(1) << depth) - 1);

  // Shared shell: fixed direction set keeps surface samples coherent frame
  // to frame, so the motion kinds differ only in how the shell moves.
  double cx = grid * rng.next_uniform(0.42f, 0.58f);
  double cy = grid * rng.next_uniform(0.42f, 0.58f);
  double cz = grid * rng.next_uniform(0.42f, 0.58f);
  double r0 = grid * rng.next_uniform(0.18f, 0.30f);
  double r1 = grid * rng.next_uniform(0.12f, 0.36f);  // morph target
  int vx = 0, vy = 0, vz = 0;
  if (kind == Motion::translate) {
    vx = int(rng.next_range(0, 4)) - 2;
    vy = int(rng.next_range(0, 4)) - 2;
    vz = int(rng.next_range(0, 4)) - 2;
  }
  std::vector<std::array<double, 3>> dirs(static_cast<size_t>(points));
  for (auto& d : dirs) {
    double z = rng.next_f64() * 2.0 - 1.0;
    double phi = rng.next_f64() * 6.283185307179586;
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    d = {s * std::cos(phi), s * std::sin(phi), z};
  }

  auto clampv = [&](double c) {
    double f = std::floor(c);
    if (f < 0) f = 0;
    if (f > double(hi)) f = double(hi);
    return uint32_t(f);
  };

  std::vector<SortedVoxelSet> out;
  out.reserve(size_t(frames));
  for (int f = 0; f < frames; ++f) {
    std::vector<Voxel> pts;
    pts.reserve(size_t(points));
    if (kind == Motion::random) {
      for (int i = 0; i < points; ++i)
        pts.push_back(Voxel{uint32_t(rng.next_range(0, hi)), uint32_t(rng.next_range(0, hi)),
                            uint32_t(rng.next_range(0, hi))});
    } else {
      double r = r0;
      if (kind == Motion::morph && frames > 1) {
        double a = double(f) / double(frames - 1);
        r = r0 + a * (r1 - r0);
      }
      double ox = cx + double(f * vx), oy = cy + double(f * vy), oz = cz + double(f * vz);
      for (const auto& d : dirs) {
        double px = ox + r * d[0], py = oy + r * d[1], pz = oz + r * d[2];
        if (kind == Motion::jitter) {
          px += double(int(rng.next_range(0, 2)) - 1);
          py += double(int(rng.next_range(0, 2)) - 1);
          pz += double(int(rng.next_range(0, 2)) - 1);
        }
        pts.push_back(Voxel{clampv(px), clampv(py), clampv(pz)});
      }
    }
    out.push_back(SortedVoxelSet::build(pts, depth));
  }
  return out;
}

}  // namespace hint
