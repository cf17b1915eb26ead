#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hint/bitstream.hpp"
#include "hint/model.hpp"
#include "hint/pyramid.hpp"
#include "hint/range_coder.hpp"

namespace hint {

struct CodecConfig {
  int depth = 6;      // pyramid depth: leaves live on a 2^depth grid
  uint64_t seed = 1;  // weight init seed (fresh models only)
  ModelConfig model;

  void validate() const {
    require(depth >= 1 && depth <= kMaxDepth, ErrorKind::config,
            "depth must be in [1, " + std::to_string(kMaxDepth) + "]");
    model.validate();
  }
};

// Reference state carried between frames of a sequence: the full pyramid of
// the previously *decoded* frame (identical to the encoder's own pyramid
// because coding is lossless).
struct FrameState {
  bool has = false;
  FramePyramid pyr;

  uint64_t hash() const { return has ? pyr.content_hash() : 0; }
};

// Per-pass quantized frequency tables, recorded during coding. Tests use
// this to check that a pass's distributions depend only on already-decoded
// data.
struct CodingTrace {
  struct Pass {
    int child_level = 0;
    std::string name;  // "even.s0", "even.s1", "odd.s0", "odd.s1"
    std::vector<std::array<uint32_t, 16>> freqs;
  };
  std::vector<Pass> passes;
};

namespace detail {

inline const char* pass_name(int p) {
  static const char* kNames[4] = {"even.s0", "even.s1", "odd.s0", "odd.s1"};
  return kNames[p];
}

// Everything one coding step (parents at level d -> child codes at level
// d+1) needs besides the parent codes themselves. Pure geometry + previous
// frame content; identical on encoder and decoder by construction.
struct LevelPlan {
  UpscaleResult up;              // children, sorted, with parent row / child index
  nn::GatherPlan face;           // per parent: rows of present face-adjacent parents
  nn::Tensor2D existence;        // [Np x 2*vd] 0/1, current then previous frame
  nn::GatherPlan fine;           // per child: embedding-table rows over the prev window
  std::vector<uint32_t> even_rows, odd_rows;  // child rows by parity group
  std::vector<uint8_t> even_index;            // child index of each even row
  std::vector<uint32_t> odd_parent;           // parent row of each odd row
  nn::GatherPlan sib_group;                   // per parent: positions into the even rows
};

inline LevelPlan build_level_plan(const SparseLevel& parents, const SortedVoxelSet* prev_same,
                                  const SortedVoxelSet* prev_child, const ModelConfig& cfg) {
  LevelPlan plan;
  const SortedVoxelSet& cur = parents.coords;
  const int d = parents.level;
  const size_t np = cur.size();
  const int64_t limit = int64_t(1) << d;

  static const NeighborhoodSpec kFace = NeighborhoodSpec::make(7);
  plan.face.offsets.assign(np + 1, 0);
  plan.face.divisors.assign(np, 0.0f);
  for (size_t i = 0; i < np; ++i) {
    Voxel v = cur.voxel_at(i);
    for (const Offset3& o : kFace.offsets) {
      if (o.dx == 0 && o.dy == 0 && o.dz == 0) continue;
      int64_t nx = int64_t(v.x) + o.dx, ny = int64_t(v.y) + o.dy, nz = int64_t(v.z) + o.dz;
      if (nx < 0 || ny < 0 || nz < 0 || nx >= limit || ny >= limit || nz >= limit) continue;
      ptrdiff_t j =
          cur.find_key(morton_encode(Voxel{uint32_t(nx), uint32_t(ny), uint32_t(nz)}, d));
      if (j >= 0) plan.face.indices.push_back(uint32_t(j));
    }
    plan.face.offsets[i + 1] = uint32_t(plan.face.indices.size());
    plan.face.divisors[i] = float(plan.face.offsets[i + 1] - plan.face.offsets[i]);
  }

  if (cfg.use_coarse) {
    const NeighborhoodSpec spec = NeighborhoodSpec::make(cfg.vd);
    plan.existence = nn::Tensor2D(int(np), 2 * cfg.vd);
    for (size_t i = 0; i < np; ++i) {
      auto cells = expand_neighborhood(cur.voxel_at(i), spec);
      for (size_t j = 0; j < cells.size(); ++j) {
        if (cur.lookup(cells[j][0], cells[j][1], cells[j][2]).found)
          plan.existence.at(int(i), int(j)) = 1.0f;
        if (prev_same && prev_same->lookup(cells[j][0], cells[j][1], cells[j][2]).found)
          plan.existence.at(int(i), int(j) + cfg.vd) = 1.0f;
      }
    }
  }

  plan.up = upscale(parents);
  const size_t nc = plan.up.coords.size();

  if (cfg.use_fine) {
    if (prev_child && !prev_child->empty()) {
      const NeighborhoodSpec spec = NeighborhoodSpec::make(cfg.vfine);
      plan.fine.offsets.resize(nc + 1);
      plan.fine.offsets[0] = 0;
      plan.fine.indices.reserve(nc * spec.offsets.size());
      plan.fine.divisors.assign(nc, float(spec.offsets.size()));
      for (size_t r = 0; r < nc; ++r) {
        auto cells = expand_neighborhood(plan.up.coords.voxel_at(r), spec);
        for (const auto& q : cells) {
          auto hit = prev_child->lookup(q[0], q[1], q[2]);
          plan.fine.indices.push_back(hit.found ? hit.code : 0);
        }
        plan.fine.offsets[r + 1] = uint32_t(plan.fine.indices.size());
      }
    } else {
      // No previous content: the mean over the window of embed(0) is just
      // embed(0), value and gradient alike, so sample it once.
      plan.fine.offsets.resize(nc + 1);
      for (size_t r = 0; r <= nc; ++r) plan.fine.offsets[r] = uint32_t(r);
      plan.fine.indices.assign(nc, 0);
      plan.fine.divisors.assign(nc, 1.0f);
    }
  }

  for (size_t r = 0; r < nc; ++r) {
    if (is_even_child(plan.up.child_index[r])) {
      plan.even_rows.push_back(uint32_t(r));
      plan.even_index.push_back(plan.up.child_index[r]);
    } else {
      plan.odd_rows.push_back(uint32_t(r));
      plan.odd_parent.push_back(plan.up.parent_of[r]);
    }
  }

  if (cfg.use_sibling) {
    // Child rows are parent-ordered, so each parent's even children sit in
    // one contiguous run of the even list.
    plan.sib_group.offsets.assign(np + 1, 0);
    plan.sib_group.divisors.assign(np, 0.0f);
    std::vector<uint32_t> count(np, 0);
    for (uint32_t row : plan.even_rows) count[plan.up.parent_of[row]] += 1;
    for (size_t p = 0; p < np; ++p) {
      plan.sib_group.offsets[p + 1] = plan.sib_group.offsets[p] + count[p];
      plan.sib_group.divisors[p] = float(count[p]);
    }
    plan.sib_group.indices.resize(plan.even_rows.size());
    for (uint32_t e = 0; e < plan.even_rows.size(); ++e) plan.sib_group.indices[e] = e;
  }
  return plan;
}

struct LevelGraph {
  std::array<nn::Tape::VarId, 4> logits{-1, -1, -1, -1};
  std::array<std::vector<uint8_t>, 4> syms;  // nibbles produced per pass
  std::vector<uint8_t> child_codes;          // assembled, aligned with plan.up rows
};

// One coding step over the four-pass schedule. pass_fn(logits, rows, pass)
// turns each pass's (already evaluated) logits into nibbles -- by reading
// the known codes, by feeding the encoder, or by querying the decoder --
// which lets the encode, decode, and training paths share this graph.
template <class PassFn>
LevelGraph run_level(HintModel& model, nn::Tape& t, const SparseLevel& parents,
                     const LevelPlan& plan, PassFn&& pass_fn) {
  const ModelConfig& mc = model.config();
  LevelGraph g;
  auto pf = model.parent_features(t, parents.codes(), plan.face,
                                  mc.use_coarse ? &plan.existence : nullptr);
  auto cf = model.child_features(t, pf, plan.up.parent_of, mc.use_fine ? &plan.fine : nullptr);
  g.child_codes.assign(plan.up.coords.size(), 0);

  auto fe = t.gather_rows(cf, plan.even_rows);
  g.logits[0] = model.s0_logits(t, fe);
  g.syms[0] = pass_fn(g.logits[0], plan.even_rows, 0);
  g.logits[1] = model.s1_logits(t, fe, g.syms[0]);
  g.syms[1] = pass_fn(g.logits[1], plan.even_rows, 1);

  std::vector<uint8_t> even_codes(plan.even_rows.size());
  for (size_t i = 0; i < even_codes.size(); ++i) {
    even_codes[i] = uint8_t((g.syms[1][i] << 4) | g.syms[0][i]);
    g.child_codes[plan.even_rows[i]] = even_codes[i];
  }

  auto fo = t.gather_rows(cf, plan.odd_rows);
  if (mc.use_sibling && !plan.odd_rows.empty()) {
    auto ctx = model.sibling_context(t, even_codes, plan.even_index, plan.sib_group);
    fo = t.add(fo, t.gather_rows(ctx, plan.odd_parent));
  }
  g.logits[2] = model.s0_logits(t, fo);
  g.syms[2] = pass_fn(g.logits[2], plan.odd_rows, 2);
  g.logits[3] = model.s1_logits(t, fo, g.syms[2]);
  g.syms[3] = pass_fn(g.logits[3], plan.odd_rows, 3);
  for (size_t i = 0; i < plan.odd_rows.size(); ++i)
    g.child_codes[plan.odd_rows[i]] = uint8_t((g.syms[3][i] << 4) | g.syms[2][i]);
  return g;
}

inline std::array<uint32_t, 16> cdf_freqs(const coder::QuantizedCdf& cdf) {
  std::array<uint32_t, 16> f;
  for (uint32_t s = 0; s < 16; ++s) f[s] = cdf.freq(s);
  return f;
}

inline void check_state(const CodecConfig& cfg, const HintModel& model, const FrameState& prev) {
  require(model.config().hash() == cfg.model.hash(), ErrorKind::config,
          "model was built from a different configuration");
  if (prev.has)
    require(prev.pyr.depth == cfg.depth, ErrorKind::config,
            "previous-frame state has depth " + std::to_string(prev.pyr.depth) +
                ", codec is configured for " + std::to_string(cfg.depth));
}

}  // namespace detail

struct FrameStats {
  size_t leaf_count = 0;
  size_t coded_voxels = 0;  // voxels of levels 1..D-1 (two nibbles each)
  size_t header_bytes = 0;
  size_t payload_bytes = 0;
  uint64_t state_hash = 0;  // pyramid hash; must match across encoder/decoder
};

struct DecodeResult {
  SortedVoxelSet leaves;
  FramePyramid pyramid;
  FrameHeader header;
  FrameStats stats;
};

// Decodes one frame coded against `prev` (an empty state for the first
// frame of a sequence). The returned pyramid becomes the next state.
inline DecodeResult decode_frame(HintModel& model, const CodecConfig& cfg,
                                 const std::vector<uint8_t>& bytes, const FrameState& prev,
                                 CodingTrace* trace = nullptr) {
  cfg.validate();
  detail::check_state(cfg, model, prev);
  ByteReader rd(bytes.data(), bytes.size());
  ParsedFrame parsed = read_frame(rd);
  const FrameHeader& h = parsed.header;
  const ModelConfig& mc = model.config();

  auto flag = [](bool b) { return std::string(b ? "on" : "off"); };
  require(h.use_coarse == mc.use_coarse, ErrorKind::config,
          "coarse-temporal flag mismatch: stream " + flag(h.use_coarse) + ", decoder " +
              flag(mc.use_coarse));
  require(h.use_fine == mc.use_fine, ErrorKind::config,
          "fine-temporal flag mismatch: stream " + flag(h.use_fine) + ", decoder " +
              flag(mc.use_fine));
  require(h.use_sibling == mc.use_sibling, ErrorKind::config,
          "sibling flag mismatch: stream " + flag(h.use_sibling) + ", decoder " +
              flag(mc.use_sibling));
  require(int(h.vd) == mc.vd, ErrorKind::config,
          "coarse window mismatch: stream " + std::to_string(int(h.vd)) + ", decoder " +
              std::to_string(mc.vd));
  require(int(h.vfine) == mc.vfine, ErrorKind::config,
          "fine window mismatch: stream " + std::to_string(int(h.vfine)) + ", decoder " +
              std::to_string(mc.vfine));
  require(int(h.channels) == mc.channels, ErrorKind::config,
          "channel width mismatch: stream " + std::to_string(int(h.channels)) + ", decoder " +
              std::to_string(mc.channels));
  require(int(h.depth) == cfg.depth, ErrorKind::config,
          "depth mismatch: stream " + std::to_string(int(h.depth)) + ", decoder configured for " +
              std::to_string(cfg.depth));
  require(h.config_hash == mc.hash(), ErrorKind::config, "config hash mismatch");
  require(h.params_fingerprint == model.fingerprint(), ErrorKind::config,
          "parameter fingerprint mismatch: stream was coded with different weights");
  require(h.has_prev == prev.has, ErrorKind::state,
          h.has_prev ? "stream was coded against a previous frame but none was supplied"
                     : "stream was coded stateless but a previous frame was supplied");

  require(h.root_codes.size() == 1, ErrorKind::corrupt_stream,
          "expected a single root cell, header declares " + std::to_string(h.root_codes.size()));
  require(h.root_xyz[0] == 0 && h.root_xyz[1] == 0 && h.root_xyz[2] == 0,
          ErrorKind::corrupt_stream, "root cell is not at the origin");

  std::vector<SparseLevel> levels;
  levels.reserve(size_t(cfg.depth));
  SparseLevel l0;
  l0.level = 0;
  l0.coords = SortedVoxelSet::from_sorted_keys({0}, 0, {h.root_codes[0]});
  levels.push_back(std::move(l0));

  coder::RangeDecoder dec(parsed.payload.data(), parsed.payload.size());
  for (int d = 0; d + 1 < cfg.depth; ++d) {
    detail::LevelPlan plan = detail::build_level_plan(
        levels[size_t(d)], prev.has ? &prev.pyr.levels[size_t(d)].coords : nullptr,
        prev.has ? &prev.pyr.levels[size_t(d) + 1].coords : nullptr, mc);
    require(plan.up.coords.size() == size_t(h.level_counts[size_t(d)]), ErrorKind::corrupt_stream,
            "level " + std::to_string(d + 1) + " holds " + std::to_string(plan.up.coords.size()) +
                " voxels, header declares " + std::to_string(h.level_counts[size_t(d)]));
    nn::Tape t(false);
    auto g = detail::run_level(
        model, t, levels[size_t(d)], plan,
        [&](nn::Tape::VarId lg, const std::vector<uint32_t>&, int pass) {
          nn::Tensor2D probs = nn::softmax_rows(t.val(lg));
          CodingTrace::Pass* tp = nullptr;
          if (trace) {
            trace->passes.push_back({d + 1, detail::pass_name(pass), {}});
            tp = &trace->passes.back();
          }
          std::vector<uint8_t> out(size_t(probs.rows), 0);
          for (int i = 0; i < probs.rows; ++i) {
            auto cdf = coder::quantize_probs(probs.row(i));
            if (tp) tp->freqs.push_back(detail::cdf_freqs(cdf));
            out[size_t(i)] = uint8_t(coder::decode_symbol(dec, cdf));
          }
          return out;
        });
    for (size_t r = 0; r < g.child_codes.size(); ++r)
      require(g.child_codes[r] != 0, ErrorKind::corrupt_stream,
              "decoded occupancy code 0 at level " + std::to_string(d + 1) + " row " +
                  std::to_string(r));
    SparseLevel next;
    next.level = d + 1;
    next.coords = SortedVoxelSet::from_sorted_keys(plan.up.coords.keys(), d + 1,
                                                   std::move(g.child_codes));
    levels.push_back(std::move(next));
  }

  DecodeResult res;
  res.header = h;
  res.pyramid.depth = cfg.depth;
  res.pyramid.leaves = upscale(levels.back()).coords;
  res.pyramid.levels = std::move(levels);
  res.leaves = res.pyramid.leaves;
  res.stats.leaf_count = res.leaves.size();
  for (uint32_t c : h.level_counts) res.stats.coded_voxels += c;
  res.stats.header_bytes = header_bytes(h);
  res.stats.payload_bytes = parsed.payload.size();
  res.stats.state_hash = res.pyramid.content_hash();
  return res;
}

// Convenience wrapper: decode a whole sequence, threading the state.
inline std::vector<DecodeResult> decode_sequence(HintModel& model, const CodecConfig& cfg,
                                                 const std::vector<std::vector<uint8_t>>& frames) {
  std::vector<DecodeResult> out;
  FrameState state;
  for (const auto& bytes : frames) {
    out.push_back(decode_frame(model, cfg, bytes, state));
    state.has = true;
    state.pyr = out.back().pyramid;
  }
  return out;
}

#ifndef HINT_DECODE_ONLY

struct EncodeResult {
  std::vector<uint8_t> bytes;
  FrameStats stats;
  FramePyramid pyramid;  // becomes the next FrameState
};

inline EncodeResult encode_frame(HintModel& model, const CodecConfig& cfg,
                                 const SortedVoxelSet& leaves, const FrameState& prev,
                                 uint32_t frame_index, CodingTrace* trace = nullptr) {
  cfg.validate();
  detail::check_state(cfg, model, prev);
  require(!leaves.empty(), ErrorKind::invalid_argument, "cannot encode an empty frame");
  require(leaves.depth() == cfg.depth, ErrorKind::config,
          "frame is quantized to depth " + std::to_string(leaves.depth()) +
              ", codec is configured for " + std::to_string(cfg.depth));
  const ModelConfig& mc = model.config();
  FramePyramid pyr = build_pyramid(leaves, cfg.depth);

  FrameHeader h;
  h.use_coarse = mc.use_coarse;
  h.use_fine = mc.use_fine;
  h.use_sibling = mc.use_sibling;
  h.has_prev = prev.has;
  h.vd = uint8_t(mc.vd);
  h.vfine = uint8_t(mc.vfine);
  h.channels = uint8_t(mc.channels);
  h.depth = uint8_t(cfg.depth);
  h.frame_index = frame_index;
  h.params_fingerprint = model.fingerprint();
  h.config_hash = mc.hash();
  Voxel root = pyr.levels[0].coords.voxel_at(0);
  h.root_xyz = {uint8_t(root.x), uint8_t(root.y), uint8_t(root.z)};
  h.root_codes = pyr.levels[0].codes();
  for (int d = 1; d < cfg.depth; ++d)
    h.level_counts.push_back(uint32_t(pyr.levels[size_t(d)].size()));

  coder::RangeEncoder enc;
  for (int d = 0; d + 1 < cfg.depth; ++d) {
    detail::LevelPlan plan = detail::build_level_plan(
        pyr.levels[size_t(d)], prev.has ? &prev.pyr.levels[size_t(d)].coords : nullptr,
        prev.has ? &prev.pyr.levels[size_t(d) + 1].coords : nullptr, mc);
    const std::vector<uint8_t>& truth = pyr.levels[size_t(d) + 1].codes();
    nn::Tape t(false);
    detail::run_level(model, t, pyr.levels[size_t(d)], plan,
                      [&](nn::Tape::VarId lg, const std::vector<uint32_t>& rows, int pass) {
                        nn::Tensor2D probs = nn::softmax_rows(t.val(lg));
                        CodingTrace::Pass* tp = nullptr;
                        if (trace) {
                          trace->passes.push_back({d + 1, detail::pass_name(pass), {}});
                          tp = &trace->passes.back();
                        }
                        std::vector<uint8_t> out(rows.size(), 0);
                        for (size_t i = 0; i < rows.size(); ++i) {
                          auto cdf = coder::quantize_probs(probs.row(int(i)));
                          if (tp) tp->freqs.push_back(detail::cdf_freqs(cdf));
                          uint8_t code = truth[rows[i]];
                          uint8_t nib = (pass & 1) ? uint8_t(code >> 4) : uint8_t(code & 15);
                          coder::encode_symbol(enc, cdf, nib);
                          out[i] = nib;
                        }
                        return out;
                      });
  }
  std::vector<uint8_t> payload = enc.finish();

  EncodeResult res;
  ByteWriter w;
  write_frame(w, h, payload);
  res.bytes = w.take();
  res.stats.leaf_count = leaves.size();
  for (uint32_t c : h.level_counts) res.stats.coded_voxels += c;
  res.stats.header_bytes = header_bytes(h);
  res.stats.payload_bytes = payload.size();
  res.stats.state_hash = pyr.content_hash();
  res.pyramid = std::move(pyr);
  return res;
}

inline std::vector<EncodeResult> encode_sequence(HintModel& model, const CodecConfig& cfg,
                                                 const std::vector<SortedVoxelSet>& frames) {
  std::vector<EncodeResult> out;
  FrameState state;
  for (size_t i = 0; i < frames.size(); ++i) {
    out.push_back(encode_frame(model, cfg, frames[i], state, uint32_t(i)));
    state.has = true;
    state.pyr = out.back().pyramid;
  }
  return out;
}

// --- Teacher-forced training.
//
// Plans depend only on geometry and the previous frame, so each (frame,
// prev) pair is planned once and reused every epoch.

struct TrainSample {
  FramePyramid pyr;
  std::vector<detail::LevelPlan> plans;  // one per coding step
  size_t coded_voxels = 0;
};

inline TrainSample make_train_sample(const SortedVoxelSet& leaves, const FrameState& prev,
                                     const CodecConfig& cfg) {
  cfg.validate();
  if (prev.has)
    require(prev.pyr.depth == cfg.depth, ErrorKind::config,
            "previous-frame state depth does not match codec depth");
  TrainSample s;
  s.pyr = build_pyramid(leaves, cfg.depth);
  for (int d = 0; d + 1 < cfg.depth; ++d) {
    s.plans.push_back(detail::build_level_plan(
        s.pyr.levels[size_t(d)], prev.has ? &prev.pyr.levels[size_t(d)].coords : nullptr,
        prev.has ? &prev.pyr.levels[size_t(d) + 1].coords : nullptr, cfg.model));
    s.coded_voxels += s.pyr.levels[size_t(d) + 1].size();
  }
  return s;
}

inline std::vector<TrainSample> make_train_set(const std::vector<std::vector<SortedVoxelSet>>& seqs,
                                               const CodecConfig& cfg) {
  std::vector<TrainSample> out;
  for (const auto& seq : seqs) {
    FrameState state;
    for (const auto& frame : seq) {
      out.push_back(make_train_sample(frame, state, cfg));
      state.has = true;
      state.pyr = out.back().pyr;
    }
  }
  require(!out.empty(), ErrorKind::invalid_argument, "training set is empty");
  return out;
}

// Total teacher-forced code length of one frame in bits (model estimate,
// before CDF quantization). When `learn` is set, also accumulates gradients
// of (bits / coded_voxels) into the parameter store.
inline double frame_bits(HintModel& model, const TrainSample& s, bool learn) {
  double total = 0.0;
  for (size_t l = 0; l < s.plans.size(); ++l) {
    const detail::LevelPlan& plan = s.plans[l];
    const std::vector<uint8_t>& truth = s.pyr.levels[l + 1].codes();
    nn::Tape t(learn);
    auto g = detail::run_level(model, t, s.pyr.levels[l], plan,
                               [&](nn::Tape::VarId, const std::vector<uint32_t>& rows, int pass) {
                                 std::vector<uint8_t> out(rows.size(), 0);
                                 for (size_t i = 0; i < rows.size(); ++i) {
                                   uint8_t code = truth[rows[i]];
                                   out[i] = (pass & 1) ? uint8_t(code >> 4) : uint8_t(code & 15);
                                 }
                                 return out;
                               });
    nn::Tape::VarId level_bits = -1;
    for (int pass = 0; pass < 4; ++pass) {
      if (g.syms[size_t(pass)].empty()) continue;
      auto mean = t.softmax_cross_entropy(g.logits[size_t(pass)], g.syms[size_t(pass)]);
      auto bits = t.scale(mean, float(g.syms[size_t(pass)].size()));
      level_bits = level_bits < 0 ? bits : t.add(level_bits, bits);
    }
    if (level_bits < 0) continue;
    total += double(t.val(level_bits).at(0, 0));
    if (learn) t.backward(level_bits, 1.0f / float(s.coded_voxels));
  }
  return total;
}

struct TrainOptions {
  int steps = 5000;
  float lr = 1e-3f;
  std::string checkpoint_dir;  // when set, a checkpoint is saved each epoch
  std::function<void(int step, double bits_per_code)> on_log;
  int log_every = 0;
};

struct TrainResult {
  std::vector<double> loss_curve;  // bits per occupancy code, per step
};

inline TrainResult train(HintModel& model, const std::vector<TrainSample>& samples,
                         const TrainOptions& opt) {
  require(!samples.empty(), ErrorKind::invalid_argument, "training set is empty");
  require(opt.steps >= 1, ErrorKind::invalid_argument, "step count must be positive");
  TrainResult res;
  res.loss_curve.reserve(size_t(opt.steps));
  for (int step = 0; step < opt.steps; ++step) {
    const TrainSample& s = samples[size_t(step) % samples.size()];
    model.params().zero_grads();
    double bits = frame_bits(model, s, true);
    double per_code = bits / double(s.coded_voxels);
    require(std::isfinite(per_code), ErrorKind::state,
            "training diverged (non-finite loss) at step " + std::to_string(step));
    res.loss_curve.push_back(per_code);
    model.params().adam_step(opt.lr);
    if (opt.on_log && opt.log_every > 0 && (step + 1) % opt.log_every == 0)
      opt.on_log(step + 1, per_code);
    if (!opt.checkpoint_dir.empty() && (size_t(step) + 1) % samples.size() == 0) {
      size_t epoch = (size_t(step) + 1) / samples.size();
      nn::save_checkpoint(model.params(), model.config().hash(),
                          opt.checkpoint_dir + "/epoch_" + std::to_string(epoch) + ".ckpt");
    }
  }
  return res;
}

#endif  // HINT_DECODE_ONLY

}  // namespace hint
