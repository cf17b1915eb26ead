#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hint/common.hpp"

namespace hint::coder {

// Carry-less 64-bit range coder. Bytes shift out of the top once the
// leading byte of [low, low+range) is settled; when range drops below
// kBot without agreement, range is clipped to the current kBot block so
// the carry can never propagate into emitted bytes.
constexpr uint64_t kTop = 1ull << 56;
constexpr uint64_t kBot = 1ull << 48;

constexpr uint32_t kProbBits = 16;
constexpr uint32_t kProbTotal = 1u << kProbBits;

class RangeEncoder {
public:
  // Narrows the interval to [cum/total, (cum+freq)/total). freq >= 1.
  void encode(uint32_t cum, uint32_t freq, uint32_t total) {
    range_ /= total;
    low_ += uint64_t(cum) * range_;
    range_ *= freq;
    normalize();
  }

  // Terminates the stream with the 4 bytes of the smallest multiple of
  // 2^32 inside the final interval (range >= kBot > 2^32 here, so one
  // always exists and the implied low tail bits are zero — matching the
  // decoder's zero fill past the end of the buffer).
  std::vector<uint8_t> finish() {
    uint64_t c = (low_ + 0xFFFFFFFFull) & ~0xFFFFFFFFull;
    for (int i = 0; i < 4; ++i) {
      out_.push_back(uint8_t(c >> 56));
      c <<= 8;
    }
    low_ = 0;
    range_ = ~0ull;
    return std::move(out_);
  }

  size_t bytes_written() const { return out_.size(); }

private:
  void normalize() {
    while (true) {
      if ((low_ ^ (low_ + range_)) < kTop) {
        // top byte settled, fall through to emit
      } else if (range_ < kBot) {
        range_ = (0 - low_) & (kBot - 1);
      } else {
        break;
      }
      out_.push_back(uint8_t(low_ >> 56));
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  std::vector<uint8_t> out_;
  uint64_t low_ = 0;
  uint64_t range_ = ~0ull;
};

class RangeDecoder {
public:
  RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
    for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
  }

  // Call once per symbol: returns a value in [0, total) that the caller
  // maps back to a symbol via its cumulative table, then reports the
  // chosen (cum, freq) through decode_update.
  uint32_t decode_freq(uint32_t total) {
    range_ /= total;
    uint64_t v = (code_ - low_) / range_;
    return uint32_t(v >= total ? total - 1 : v);
  }

  void decode_update(uint32_t cum, uint32_t freq) {
    low_ += uint64_t(cum) * range_;
    range_ *= freq;
    while (true) {
      if ((low_ ^ (low_ + range_)) < kTop) {
      } else if (range_ < kBot) {
        range_ = (0 - low_) & (kBot - 1);
      } else {
        break;
      }
      code_ = (code_ << 8) | next_byte();
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  size_t bytes_consumed() const { return pos_; }

private:
  uint8_t next_byte() { return pos_ < size_ ? data_[pos_++] : 0; }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint64_t low_ = 0;
  uint64_t code_ = 0;
  uint64_t range_ = ~0ull;
};

// 16-symbol cumulative frequency table over a 2^16 grand total, every
// symbol guaranteed a nonzero frequency so any value stays decodable.
struct QuantizedCdf {
  std::array<uint32_t, 17> cum{};

  uint32_t freq(uint32_t s) const { return cum[s + 1] - cum[s]; }

  uint32_t symbol_for(uint32_t f) const {
    // cum is strictly increasing (freq floor of 1), binary search.
    uint32_t lo = 0, hi = 16;
    while (hi - lo > 1) {
      uint32_t mid = (lo + hi) / 2;
      if (cum[mid] <= f)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }
};

// Largest-remainder quantization: each symbol gets 1 + floor(p*(total-16))
// and leftover units go to the largest fractional parts (ties to the lower
// symbol index). Exact for uniform inputs: 65536/16 = 4096 per symbol.
inline QuantizedCdf quantize_probs(const float* p, int n = 16) {
  require(n == 16, ErrorKind::invalid_argument, "quantize_probs expects 16 symbols");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    require(p[i] >= 0.0f && p[i] == p[i], ErrorKind::invalid_argument,
            "quantize_probs: negative or NaN probability");
    sum += double(p[i]);
  }
  require(sum > 0.0, ErrorKind::invalid_argument, "quantize_probs: all-zero probabilities");
  const double budget = double(kProbTotal - uint32_t(n));
  std::array<uint32_t, 16> freq{};
  std::array<double, 16> rem{};
  uint32_t used = 0;
  for (int i = 0; i < n; ++i) {
    double f = double(p[i]) / sum * budget;
    double base = std::floor(f);
    freq[size_t(i)] = 1 + uint32_t(base);
    rem[size_t(i)] = f - base;
    used += uint32_t(base);
  }
  uint32_t leftover = uint32_t(budget) - used;
  std::array<int, 16> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rem[size_t(a)] > rem[size_t(b)];
  });
  for (uint32_t k = 0; k < leftover; ++k) freq[size_t(order[k % 16])] += 1;
  QuantizedCdf cdf;
  cdf.cum[0] = 0;
  for (int i = 0; i < n; ++i) cdf.cum[size_t(i) + 1] = cdf.cum[size_t(i)] + freq[size_t(i)];
  return cdf;
}

inline void encode_symbol(RangeEncoder& enc, const QuantizedCdf& cdf, uint32_t s) {
  enc.encode(cdf.cum[s], cdf.freq(s), kProbTotal);
}

inline uint32_t decode_symbol(RangeDecoder& dec, const QuantizedCdf& cdf) {
  uint32_t f = dec.decode_freq(kProbTotal);
  uint32_t s = cdf.symbol_for(f);
  dec.decode_update(cdf.cum[s], cdf.freq(s));
  return s;
}

}  // namespace hint::coder
