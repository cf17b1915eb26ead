#pragma once

// Decoder-only translation unit boundary. The implementation file is
// compiled with HINT_DECODE_ONLY, which removes every encoder and training
// entry point from the codec header, so a successful build proves the decode
// path never touches original-frame data.

#include <cstdint>
#include <vector>

namespace acceptance {

// decodes a chained sequence with a fresh seeded model and returns each
// frame's leaf-set content hash
std::vector<uint64_t> decode_only_probe(const std::vector<std::vector<uint8_t>>& streams,
                                        int depth, uint64_t seed);

}  // namespace acceptance
