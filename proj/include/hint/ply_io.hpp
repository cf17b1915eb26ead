#pragma once

// PLY point-cloud I/O and voxel quantization.
//
// Reading accepts ascii and binary_little_endian PLY files, extracts the
// vertex x/y/z properties (float or double) and skips everything else.
// Writing always emits binary_little_endian with float coordinates.
//
// quantize() maps a cloud onto a cubic integer grid of the requested bit
// depth.  Clouds whose coordinates are already integers inside the grid are
// passed through unchanged so pre-quantized datasets keep their exact
// coordinates; everything else gets a uniform affine fit of the bounding box
// with the transform recorded for dequantization.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hint/common.hpp"
#include "hint/geom.hpp"

namespace hint {

struct PointCloud {
  std::vector<std::array<double, 3>> points;
};

namespace ply_detail {

struct Property {
  std::string name;
  size_t size = 0;     // bytes for the scalar types, 0 for list properties
  bool is_double = false;
  bool is_float = false;
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Property> props;

  bool has_list() const {
    for (const auto& p : props)
      if (p.size == 0) return true;
    return false;
  }
  size_t stride() const {
    size_t s = 0;
    for (const auto& p : props) s += p.size;
    return s;
  }
};

inline size_t scalar_size(const std::string& t) {
  if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
  if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
  if (t == "int" || t == "int32" || t == "uint" || t == "uint32") return 4;
  if (t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

[[noreturn]] inline void fail(const std::string& path, size_t line, const std::string& msg) {
  raise(ErrorKind::parse, path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace ply_detail

inline PointCloud read_ply(const std::string& path) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path);

  std::string line;
  size_t lineno = 1;
  if (!std::getline(in, line)) fail(path, lineno, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") fail(path, lineno, "not a PLY file (missing 'ply' magic)");

  bool binary = false, format_seen = false, ended = false;
  std::vector<Element> elems;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else fail(path, lineno, "unsupported format '" + fmt + "'");
      format_seen = true;
    } else if (word == "element") {
      Element e;
      long long n = -1;
      ls >> e.name >> n;
      if (e.name.empty() || n < 0) fail(path, lineno, "malformed element line");
      e.count = size_t(n);
      elems.push_back(std::move(e));
    } else if (word == "property") {
      if (elems.empty()) fail(path, lineno, "property before any element");
      std::string type;
      ls >> type;
      Property p;
      if (type == "list") {
        std::string ctype, vtype;
        ls >> ctype >> vtype >> p.name;
        if (scalar_size(ctype) == 0 || scalar_size(vtype) == 0 || p.name.empty())
          fail(path, lineno, "malformed list property");
        p.size = 0;
      } else {
        p.size = scalar_size(type);
        if (p.size == 0) fail(path, lineno, "unknown property type '" + type + "'");
        p.is_float = (type == "float" || type == "float32");
        p.is_double = (type == "double" || type == "float64");
        ls >> p.name;
        if (p.name.empty()) fail(path, lineno, "property without a name");
      }
      elems.back().props.push_back(std::move(p));
    } else if (word == "end_header") {
      ended = true;
      break;
    } else {
      fail(path, lineno, "unrecognized header keyword '" + word + "'");
    }
  }
  if (!ended) fail(path, lineno, "missing end_header");
  if (!format_seen) fail(path, lineno, "missing format line");

  size_t vi = elems.size();
  for (size_t i = 0; i < elems.size(); ++i)
    if (elems[i].name == "vertex") { vi = i; break; }
  if (vi == elems.size()) fail(path, lineno, "no vertex element");
  const Element& vert = elems[vi];
  if (vert.has_list()) fail(path, lineno, "list property inside vertex element is unsupported");

  // locate x/y/z among the vertex properties
  int col[3] = {-1, -1, -1};
  size_t off[3] = {0, 0, 0};
  bool dbl[3] = {false, false, false};
  {
    size_t running = 0;
    for (size_t i = 0; i < vert.props.size(); ++i) {
      const Property& p = vert.props[i];
      int axis = p.name == "x" ? 0 : p.name == "y" ? 1 : p.name == "z" ? 2 : -1;
      if (axis >= 0) {
        if (!p.is_float && !p.is_double)
          fail(path, lineno, "vertex property '" + p.name + "' must be float or double");
        col[axis] = int(i);
        off[axis] = running;
        dbl[axis] = p.is_double;
      }
      running += p.size;
    }
  }
  for (int a = 0; a < 3; ++a)
    if (col[a] < 0) fail(path, lineno, std::string("vertex element lacks ") + "xyz"[a]);

  // skip elements declared before vertex
  for (size_t i = 0; i < vi; ++i) {
    const Element& e = elems[i];
    if (!binary) {
      for (size_t r = 0; r < e.count; ++r, ++lineno)
        if (!std::getline(in, line)) fail(path, lineno, "unexpected end of data");
    } else {
      if (e.has_list())
        fail(path, lineno, "cannot skip binary element '" + e.name + "' with list properties");
      in.seekg(std::streamoff(e.count * e.stride()), std::ios::cur);
      if (!in) fail(path, lineno, "unexpected end of data");
    }
  }

  PointCloud cloud;
  cloud.points.reserve(vert.count);
  if (!binary) {
    for (size_t r = 0; r < vert.count; ++r) {
      ++lineno;
      if (!std::getline(in, line)) fail(path, lineno, "unexpected end of data");
      std::istringstream ls(line);
      std::array<double, 3> pt{};
      double v;
      int want = int(vert.props.size());
      for (int c = 0; c < want; ++c) {
        if (!(ls >> v)) fail(path, lineno, "expected " + std::to_string(want) + " values");
        for (int a = 0; a < 3; ++a)
          if (col[a] == c) pt[size_t(a)] = v;
      }
      cloud.points.push_back(pt);
    }
  } else {
    size_t stride = vert.stride();
    std::vector<char> row(stride);
    for (size_t r = 0; r < vert.count; ++r) {
      in.read(row.data(), std::streamsize(stride));
      if (!in)
        fail(path, lineno, "unexpected end of data at vertex " + std::to_string(r));
      std::array<double, 3> pt{};
      for (int a = 0; a < 3; ++a) {
        if (dbl[a]) {
          double d;
          std::memcpy(&d, row.data() + off[a], 8);
          pt[size_t(a)] = d;
        } else {
          float f;
          std::memcpy(&f, row.data() + off[a], 4);
          pt[size_t(a)] = double(f);
        }
      }
      cloud.points.push_back(pt);
    }
  }
  for (size_t i = 0; i < cloud.points.size(); ++i)
    for (int a = 0; a < 3; ++a)
      if (!std::isfinite(cloud.points[i][size_t(a)]))
        fail(path, lineno, "non-finite coordinate at vertex " + std::to_string(i));
  return cloud;
}

inline void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot open " + path + " for writing");
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  for (const auto& p : cloud.points) {
    float xyz[3] = {float(p[0]), float(p[1]), float(p[2])};
    out.write(reinterpret_cast<const char*>(xyz), 12);
  }
  if (!out) raise(ErrorKind::io, "write failed for " + path);
}

// Affine grid fit shared by every frame of a sequence, so temporal
// prediction sees consistent coordinates across frames.
struct GridTransform {
  bool passthrough = false;          // coordinates were already grid integers
  double scale = 1.0;                // source units per voxel step (0 = degenerate)
  std::array<double, 3> origin{0.0, 0.0, 0.0};
};

namespace ply_detail {

inline bool grid_integral(const PointCloud& cloud, double grid) {
  for (const auto& p : cloud.points)
    for (int a = 0; a < 3; ++a) {
      double v = p[size_t(a)];
      if (v != std::floor(v) || v < 0.0 || v >= grid) return false;
    }
  return true;
}

}  // namespace ply_detail

inline GridTransform sequence_transform(const std::vector<const PointCloud*>& clouds, int bits) {
  if (bits < 1 || bits > kMaxDepth)
    raise(ErrorKind::invalid_argument, "quantize bits must be in [1, 21]");
  size_t total = 0;
  for (const auto* c : clouds) total += c->points.size();
  if (clouds.empty() || total == 0)
    raise(ErrorKind::invalid_argument, "cannot quantize an empty cloud");

  const double grid = double(uint64_t(1) << bits);
  GridTransform t;
  bool integral = true;
  for (const auto* c : clouds) integral = integral && ply_detail::grid_integral(*c, grid);
  if (integral) {
    t.passthrough = true;
    return t;
  }
  std::array<double, 3> mn{}, mx{};
  bool first = true;
  for (const auto* c : clouds)
    for (const auto& p : c->points) {
      if (first) {
        mn = mx = p;
        first = false;
        continue;
      }
      for (int a = 0; a < 3; ++a) {
        mn[size_t(a)] = std::min(mn[size_t(a)], p[size_t(a)]);
        mx[size_t(a)] = std::max(mx[size_t(a)], p[size_t(a)]);
      }
    }
  double extent = 0.0;
  for (int a = 0; a < 3; ++a) extent = std::max(extent, mx[size_t(a)] - mn[size_t(a)]);
  t.origin = mn;
  t.scale = extent / grid;
  return t;
}

inline SortedVoxelSet apply_transform(const PointCloud& cloud, const GridTransform& t, int bits) {
  if (cloud.points.empty())
    raise(ErrorKind::invalid_argument, "cannot quantize an empty cloud");
  std::vector<Voxel> vox;
  vox.reserve(cloud.points.size());
  if (t.passthrough) {
    for (const auto& p : cloud.points)
      vox.push_back({uint32_t(p[0]), uint32_t(p[1]), uint32_t(p[2])});
  } else if (t.scale == 0.0) {
    vox.push_back({0, 0, 0});  // all points coincide
  } else {
    const uint32_t top = uint32_t((uint64_t(1) << bits) - 1);
    for (const auto& p : cloud.points) {
      Voxel v{};
      uint32_t* c[3] = {&v.x, &v.y, &v.z};
      for (int a = 0; a < 3; ++a) {
        double q = std::floor((p[size_t(a)] - t.origin[size_t(a)]) / t.scale);
        *c[a] = uint32_t(std::min(std::max(q, 0.0), double(top)));
      }
      vox.push_back(v);
    }
  }
  return SortedVoxelSet::build(vox, bits);
}

struct QuantizeResult {
  SortedVoxelSet voxels;
  size_t source_points = 0;
  bool passthrough = false;
  double scale = 1.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};
};

inline QuantizeResult quantize(const PointCloud& cloud, int bits) {
  GridTransform t = sequence_transform({&cloud}, bits);
  QuantizeResult r;
  r.source_points = cloud.points.size();
  r.passthrough = t.passthrough;
  r.scale = t.passthrough ? 1.0 : t.scale;
  r.origin = t.origin;
  r.voxels = apply_transform(cloud, t, bits);
  return r;
}

// voxel coordinates as points, in grid units (what a decoder writes out)
inline PointCloud to_cloud(const SortedVoxelSet& set) {
  PointCloud c;
  c.points.reserve(set.size());
  for (size_t i = 0; i < set.size(); ++i) {
    Voxel v = set.voxel_at(i);
    c.points.push_back({double(v.x), double(v.y), double(v.z)});
  }
  return c;
}

// map voxels back to source units using the recorded transform
inline PointCloud dequantize(const QuantizeResult& r) {
  PointCloud c;
  c.points.reserve(r.voxels.size());
  for (size_t i = 0; i < r.voxels.size(); ++i) {
    Voxel v = r.voxels.voxel_at(i);
    if (r.passthrough) {
      c.points.push_back({double(v.x), double(v.y), double(v.z)});
    } else {
      std::array<double, 3> p;
      for (int a = 0; a < 3; ++a) {
        uint32_t q = a == 0 ? v.x : a == 1 ? v.y : v.z;
        p[size_t(a)] = r.origin[size_t(a)] + (double(q) + 0.5) * r.scale;
      }
      c.points.push_back(p);
    }
  }
  return c;
}

}  // namespace hint
