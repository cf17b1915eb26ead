#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hint/synthetic.hpp"

using namespace hint;

namespace {

uint32_t min_coord(const SortedVoxelSet& s, int axis) {
  uint32_t m = ~0u;
  for (size_t i = 0; i < s.size(); ++i) {
    Voxel v = s.voxel_at(i);
    m = std::min(m, axis == 0 ? v.x : axis == 1 ? v.y : v.z);
  }
  return m;
}

SortedVoxelSet shifted(const SortedVoxelSet& s, int dx, int dy, int dz) {
  std::vector<Voxel> out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    Voxel v = s.voxel_at(i);
    out.push_back(Voxel{uint32_t(int64_t(v.x) + dx), uint32_t(int64_t(v.y) + dy),
                        uint32_t(int64_t(v.z) + dz)});
  }
  return SortedVoxelSet::build(out, s.depth());
}

bool within_linf(const SortedVoxelSet& a, const SortedVoxelSet& b, int bound) {
  // every voxel of a has a voxel of b within the L-inf bound
  for (size_t i = 0; i < a.size(); ++i) {
    Voxel va = a.voxel_at(i);
    bool ok = false;
    for (size_t j = 0; j < b.size() && !ok; ++j) {
      Voxel vb = b.voxel_at(j);
      int dx = std::abs(int(va.x) - int(vb.x));
      int dy = std::abs(int(va.y) - int(vb.y));
      int dz = std::abs(int(va.z) - int(vb.z));
      ok = std::max({dx, dy, dz}) <= bound;
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("motion names map to kinds") {
  CHECK(motion_from_name("still") == Motion::still);
  CHECK(motion_from_name("static") == Motion::still);
  CHECK(motion_from_name("translate") == Motion::translate);
  CHECK(motion_from_name("jitter") == Motion::jitter);
  CHECK(motion_from_name("morph") == Motion::morph);
  CHECK(motion_from_name("random") == Motion::random);
  CHECK_THROWS_AS(motion_from_name("wobble"), Error);
}

TEST_CASE("sequences are deterministic in the seed") {
  for (Motion m : {Motion::still, Motion::translate, Motion::jitter, Motion::morph,
                   Motion::random}) {
    auto a = make_sequence(m, 3, 6, 150, 11);
    auto b = make_sequence(m, 3, 6, 150, 11);
    REQUIRE(a.size() == 3);
    for (size_t f = 0; f < a.size(); ++f) CHECK(a[f] == b[f]);
    auto c = make_sequence(m, 3, 6, 150, 12);
    bool all_same = true;
    for (size_t f = 0; f < a.size(); ++f) all_same = all_same && a[f] == c[f];
    CHECK_FALSE(all_same);
  }
}

TEST_CASE("sequence shape matches the request") {
  auto seq = make_sequence(Motion::morph, 5, 7, 400, 21);
  REQUIRE(seq.size() == 5);
  for (const auto& s : seq) {
    CHECK(s.depth() == 7);
    CHECK(s.size() >= 1);
    CHECK(s.size() <= 400);  // duplicates collapse
  }
}

TEST_CASE("still sequences repeat the first frame") {
  auto seq = make_sequence(Motion::still, 4, 6, 200, 31);
  for (size_t f = 1; f < seq.size(); ++f) CHECK(seq[f] == seq[0]);
}

TEST_CASE("translate shifts the voxel set by a constant integer velocity") {
  // at depth 6 with at most 4 frames the shell stays clear of the walls, so
  // the shift is exact; recover the velocity from the bounding-box corner
  for (uint64_t seed : {1ull, 7ull, 23ull, 99ull}) {
    auto seq = make_sequence(Motion::translate, 4, 6, 250, seed);
    int dx = int(min_coord(seq[1], 0)) - int(min_coord(seq[0], 0));
    int dy = int(min_coord(seq[1], 1)) - int(min_coord(seq[0], 1));
    int dz = int(min_coord(seq[1], 2)) - int(min_coord(seq[0], 2));
    CHECK(std::abs(dx) <= 2);
    CHECK(std::abs(dy) <= 2);
    CHECK(std::abs(dz) <= 2);
    for (size_t f = 1; f < seq.size(); ++f) {
      SortedVoxelSet moved = shifted(seq[f - 1], dx, dy, dz);
      CHECK(seq[f] == moved);
    }
  }
}

TEST_CASE("jitter stays within one step of the previous frame") {
  auto seq = make_sequence(Motion::jitter, 3, 6, 120, 41);
  for (size_t f = 1; f < seq.size(); ++f) {
    CHECK(within_linf(seq[f], seq[f - 1], 2));
    CHECK(seq[f].depth() == 6);
  }
}

TEST_CASE("morph changes the shell across frames") {
  auto seq = make_sequence(Motion::morph, 4, 6, 300, 3);
  CHECK_FALSE(seq.front() == seq.back());
}

TEST_CASE("random frames are unstructured and distinct") {
  auto seq = make_sequence(Motion::random, 3, 8, 300, 51);
  CHECK_FALSE(seq[0] == seq[1]);
  CHECK_FALSE(seq[1] == seq[2]);
}

TEST_CASE("invalid sequence arguments are rejected") {
  CHECK_THROWS_AS(make_sequence(Motion::still, 0, 6, 10, 1), Error);
  CHECK_THROWS_AS(make_sequence(Motion::still, 1, 0, 10, 1), Error);
  CHECK_THROWS_AS(make_sequence(Motion::still, 1, 22, 10, 1), Error);
  CHECK_THROWS_AS(make_sequence(Motion::still, 1, 6, 0, 1), Error);
}
