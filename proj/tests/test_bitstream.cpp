#include <catch2/catch_amalgamated.hpp>

#include "hint/bitstream.hpp"

using namespace hint;

namespace {

FrameHeader random_header(Rng& rng) {
  FrameHeader h;
  h.use_coarse = rng.next_range(0, 1) != 0;
  h.use_fine = rng.next_range(0, 1) != 0;
  h.use_sibling = rng.next_range(0, 1) != 0;
  h.has_prev = rng.next_range(0, 1) != 0;
  h.vd = uint8_t(rng.next_range(7, 125));
  h.vfine = uint8_t(rng.next_range(7, 125));
  h.channels = uint8_t(rng.next_range(1, 255));
  h.depth = uint8_t(rng.next_range(1, 21));
  h.frame_index = uint32_t(rng.next_u64());
  h.params_fingerprint = rng.next_u64();
  h.config_hash = rng.next_u64();
  uint32_t roots = uint32_t(rng.next_range(1, 5));
  for (uint32_t i = 0; i < roots; ++i) {
    h.root_xyz.push_back(uint8_t(rng.next_range(0, 255)));
    h.root_xyz.push_back(uint8_t(rng.next_range(0, 255)));
    h.root_xyz.push_back(uint8_t(rng.next_range(0, 255)));
    h.root_codes.push_back(uint8_t(rng.next_range(1, 255)));
  }
  for (int d = 1; d < int(h.depth); ++d)
    h.level_counts.push_back(uint32_t(rng.next_range(1, 1u << 20)));
  return h;
}

std::vector<uint8_t> random_payload(Rng& rng) {
  std::vector<uint8_t> p(size_t(rng.next_range(0, 300)));
  for (auto& b : p) b = uint8_t(rng.next_range(0, 255));
  return p;
}

std::vector<uint8_t> serialize(const FrameHeader& h, const std::vector<uint8_t>& payload) {
  ByteWriter w;
  write_frame(w, h, payload);
  return w.take();
}

}  // namespace

TEST_CASE("frame container round trips") {
  Rng rng(901);
  for (int trial = 0; trial < 60; ++trial) {
    FrameHeader h = random_header(rng);
    auto payload = random_payload(rng);
    auto bytes = serialize(h, payload);
    REQUIRE(bytes.size() == header_bytes(h) + payload.size());

    ByteReader rd(bytes.data(), bytes.size());
    ParsedFrame f = read_frame(rd);
    CHECK(f.header.version == h.version);
    CHECK(f.header.use_coarse == h.use_coarse);
    CHECK(f.header.use_fine == h.use_fine);
    CHECK(f.header.use_sibling == h.use_sibling);
    CHECK(f.header.has_prev == h.has_prev);
    CHECK(f.header.vd == h.vd);
    CHECK(f.header.vfine == h.vfine);
    CHECK(f.header.channels == h.channels);
    CHECK(f.header.depth == h.depth);
    CHECK(f.header.frame_index == h.frame_index);
    CHECK(f.header.params_fingerprint == h.params_fingerprint);
    CHECK(f.header.config_hash == h.config_hash);
    CHECK(f.header.root_xyz == h.root_xyz);
    CHECK(f.header.root_codes == h.root_codes);
    CHECK(f.header.level_counts == h.level_counts);
    CHECK(f.payload == payload);
    CHECK(rd.remaining() == 0);
  }
}

TEST_CASE("every truncation errors instead of crashing") {
  Rng rng(902);
  FrameHeader h = random_header(rng);
  auto payload = random_payload(rng);
  auto bytes = serialize(h, payload);
  for (size_t len = 0; len < bytes.size(); ++len) {
    std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + ptrdiff_t(len));
    ByteReader rd(cut.data(), cut.size());
    REQUIRE_THROWS_AS(read_frame(rd), Error);
  }
}

TEST_CASE("random corruption never escapes the error type") {
  Rng rng(903);
  FrameHeader h = random_header(rng);
  auto payload = random_payload(rng);
  auto bytes = serialize(h, payload);
  for (int trial = 0; trial < 500; ++trial) {
    auto bad = bytes;
    size_t n_flips = 1 + size_t(rng.next_range(0, 3));
    for (size_t i = 0; i < n_flips; ++i) {
      size_t pos = size_t(rng.next_range(0, bad.size() - 1));
      bad[pos] ^= uint8_t(rng.next_range(1, 255));
    }
    ByteReader rd(bad.data(), bad.size());
    try {
      ParsedFrame f = read_frame(rd);
      // A flip confined to the payload or to free-form fields still parses;
      // structural damage must surface as our error type only.
      (void)f;
    } catch (const Error&) {
    }
  }
  SUCCEED();
}

TEST_CASE("structural fields are validated") {
  FrameHeader h;
  h.depth = 3;
  h.root_xyz = {0, 0, 0};
  h.root_codes = {0x81};
  h.level_counts = {2, 5};
  std::vector<uint8_t> payload = {1, 2, 3};
  auto bytes = serialize(h, payload);

  auto expect_corrupt = [](std::vector<uint8_t> data) {
    ByteReader rd(data.data(), data.size());
    try {
      read_frame(rd);
      FAIL("expected a corrupt-stream error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::corrupt_stream);
    }
  };

  SECTION("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    expect_corrupt(bad);
  }
  SECTION("unsupported version") {
    auto bad = bytes;
    bad[4] = 9;
    expect_corrupt(bad);
  }
  SECTION("unknown flag bits") {
    auto bad = bytes;
    bad[5] |= 0x20;
    expect_corrupt(bad);
  }
  SECTION("depth zero") {
    auto bad = bytes;
    bad[9] = 0;
    expect_corrupt(bad);
  }
  SECTION("depth beyond the grid limit") {
    auto bad = bytes;
    bad[9] = 22;
    expect_corrupt(bad);
  }
  SECTION("root occupancy code zero") {
    auto bad = bytes;
    // layout: magic 4, version 1, flags 1, vd 1, vfine 1, channels 1,
    // depth 1, frame 4, fingerprint 8, hash 8, root count 4, xyz 3, code 1
    bad[37] = 0;
    expect_corrupt(bad);
  }
  SECTION("level table length disagrees with depth") {
    auto bad = bytes;
    bad[38] = 7;  // n_levels field
    expect_corrupt(bad);
  }
  SECTION("declared payload exceeds the stream") {
    auto bad = bytes;
    bad[bad.size() - payload.size() - 8] = 200;  // payload length (LE low byte)
    expect_corrupt(bad);
  }
  SECTION("root count zero") {
    auto bad = bytes;
    bad[30] = 0;
    expect_corrupt(bad);
  }
}

TEST_CASE("flag bits map to the advertised positions") {
  FrameHeader h;
  h.depth = 1;
  h.root_xyz = {0, 0, 0};
  h.root_codes = {1};
  h.use_coarse = true;
  h.use_fine = false;
  h.use_sibling = true;
  h.has_prev = true;
  auto bytes = serialize(h, {});
  CHECK(bytes[5] == (1u | 4u | 8u));
}
