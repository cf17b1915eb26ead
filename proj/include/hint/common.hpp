#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hint {

enum class ErrorKind {
  invalid_argument,  // bad caller input (out-of-range coords, shape mismatch, ...)
  parse,             // malformed input file (PLY, order file)
  config,            // config/params mismatch between stream and decoder
  corrupt_stream,    // bitstream fails validation or internal consistency
  verification,      // round-trip or verify-command mismatch
  io,                // filesystem problems
  state,             // API misuse (missing gradients, wrong call order)
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) raise(kind, msg);
}

// --- FNV-1a, used for config hashes, parameter fingerprints, and drift checks.

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a_u64(uint64_t v, uint64_t h) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
  return fnv1a(b, 8, h);
}

// --- Deterministic RNG. mt19937_64 output is standardized; the float mapping
// below avoids std::uniform_real_distribution, whose output is not portable.

class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  float next_f32() { return float(gen_() >> 40) * (1.0f / 16777216.0f); }

  double next_f64() { return double(gen_() >> 11) * (1.0 / 9007199254740992.0); }

  // uniform in [lo, hi]
  uint64_t next_range(uint64_t lo, uint64_t hi) {
    return lo + gen_() % (hi - lo + 1);
  }

  float next_uniform(float lo, float hi) { return lo + (hi - lo) * next_f32(); }

private:
  std::mt19937_64 gen_;
};

// --- Little-endian byte buffer helpers shared by the bitstream and checkpoint
// containers. Reads are bounds-checked and fail with corrupt_stream.

class ByteWriter {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { put(v, 2); }
  void u32(uint32_t v) { put(v, 4); }
  void u64(uint64_t v) { put(v, 8); }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void bytes(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

private:
  void put(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  std::vector<uint8_t> buf_;
};

class ByteReader {
public:
  ByteReader(const uint8_t* data, size_t n) : p_(data), n_(n) {}
  explicit ByteReader(const std::vector<uint8_t>& v) : p_(v.data()), n_(v.size()) {}

  uint8_t u8() { return uint8_t(get(1)); }
  uint16_t u16() { return uint16_t(get(2)); }
  uint32_t u32() { return uint32_t(get(4)); }
  uint64_t u64() { return get(8); }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  void bytes(void* out, size_t n) {
    require(pos_ + n <= n_, ErrorKind::corrupt_stream, "truncated input: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    std::memcpy(out, p_ + pos_, n);
    pos_ += n;
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return n_ - pos_; }

private:
  uint64_t get(int n) {
    require(pos_ + size_t(n) <= n_, ErrorKind::corrupt_stream, "truncated input at offset " + std::to_string(pos_));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= uint64_t(p_[pos_ + i]) << (8 * i);
    pos_ += size_t(n);
    return v;
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

}  // namespace hint
