#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "hint/geom.hpp"
#include "hint/nn.hpp"

namespace hint {

// Child indices split by coordinate-bit parity. Flipping one axis bit
// toggles parity, so every face neighbor of a child lies in the opposite
// group; even children are coded first and feed the odd group's context.
inline bool is_even_child(uint8_t child_index) {
  return (std::popcount(child_index) & 1) == 0;
}
constexpr uint8_t kEvenChildren[4] = {0, 3, 5, 6};
constexpr uint8_t kOddChildren[4] = {1, 2, 4, 7};

struct ModelConfig {
  int channels = 32;  // feature width
  int hidden = 64;    // hidden width of the small MLPs
  int vd = 27;        // parent-level existence window
  int vfine = 125;    // child-level previous-frame window
  bool use_coarse = true;
  bool use_fine = true;
  bool use_sibling = true;
  bool share_embed = false;  // one code-embedding table for fine + sibling paths

  void validate() const {
    require(channels >= 1 && channels <= 255, ErrorKind::config,
            "channels must be in [1, 255]");
    require(hidden >= 1, ErrorKind::config, "hidden width must be positive");
    require(vd == 7 || vd == 27 || vd == 125, ErrorKind::config,
            "coarse window must be 7, 27, or 125");
    require(vfine == 7 || vfine == 27 || vfine == 125, ErrorKind::config,
            "fine window must be 7, 27, or 125");
  }

  uint64_t hash() const {
    const char tag[] = "hintpc.model.v1";
    uint64_t h = fnv1a(tag, sizeof(tag) - 1);
    h = fnv1a_u64(uint64_t(channels), h);
    h = fnv1a_u64(uint64_t(hidden), h);
    h = fnv1a_u64(uint64_t(vd), h);
    h = fnv1a_u64(uint64_t(vfine), h);
    uint64_t flags = (use_coarse ? 1 : 0) | (use_fine ? 2 : 0) | (use_sibling ? 4 : 0) |
                     (share_embed ? 8 : 0);
    return fnv1a_u64(flags, h);
  }
};

// The occupancy entropy model. One parameter set serves every pyramid
// level. All feature fusion is element-wise addition; the only
// concatenation is inside the sibling descriptor [embed, position].
class HintModel {
public:
  static constexpr int kClasses = 16;  // one 4-bit nibble per head

  HintModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int c = cfg_.channels;
    const int h = cfg_.hidden;

    init(rng, store_.add("spatial.embed", 256, c), c);
    init(rng, store_.add("spatial.res0.w", c, c), c);
    store_.add("spatial.res0.b", 1, c);
    init(rng, store_.add("spatial.res1.w", c, c), c);
    store_.add("spatial.res1.b", 1, c);
    if (cfg_.use_coarse) {
      init(rng, store_.add("coarse.w1", h, 2 * cfg_.vd), 2 * cfg_.vd);
      store_.add("coarse.b1", 1, h);
      init(rng, store_.add("coarse.w2", c, h), h);
      store_.add("coarse.b2", 1, c);
    }
    bool shared = cfg_.share_embed && cfg_.use_fine && cfg_.use_sibling;
    if (cfg_.use_fine) {
      init(rng, store_.add(shared ? "temporal.embed" : "fine.embed", 256, c), c);
      init(rng, store_.add("fine.w", c, c), c);
    }
    if (cfg_.use_sibling) {
      if (!shared) init(rng, store_.add("sib.embed", 256, c), c);
      init(rng, store_.add("sib.w", c, c + 3), c + 3);
    }
    init(rng, store_.add("head0.w1", h, c), c);
    store_.add("head0.b1", 1, h);
    store_.add("head0.w2", kClasses, h);  // zero so untrained heads are uniform
    store_.add("head0.b2", 1, kClasses);
    init(rng, store_.add("head1.s0_embed", kClasses, c), c);
    init(rng, store_.add("head1.w1", h, c), c);
    store_.add("head1.b1", 1, h);
    store_.add("head1.w2", kClasses, h);  // zero, as above
    store_.add("head1.b2", 1, kClasses);
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  uint64_t fingerprint() const { return store_.fingerprint(); }

  // Spatial prior on parent voxels -- code embedding refined by two
  // residual blocks that average the 6 face-adjacent parents' features --
  // plus, when enabled, the existence-map MLP added on top.
  //
  // face_plan: per parent, rows of its present face neighbors.
  // existence: [Np x 2*vd] 0/1 rows, current-frame half then previous-frame
  // half; required exactly when the coarse path is enabled.
  nn::Tape::VarId parent_features(nn::Tape& t, const std::vector<uint8_t>& parent_codes,
                                  const nn::GatherPlan& face_plan,
                                  const nn::Tensor2D* existence) {
    auto x = nn::embedding_lookup(t, t.param(store_.get("spatial.embed")),
                                  widen(parent_codes));
    for (int r = 0; r < 2; ++r) {
      std::string base = "spatial.res" + std::to_string(r);
      auto m = t.gather_mean(x, face_plan);
      auto hdn = t.relu(nn::linear(t, m, t.param(store_.get(base + ".w")),
                                   t.param(store_.get(base + ".b"))));
      x = t.add(x, hdn);
    }
    if (cfg_.use_coarse) {
      require(existence != nullptr, ErrorKind::config,
              "coarse path enabled but no existence map supplied");
      require(existence->cols == 2 * cfg_.vd, ErrorKind::config,
              "existence map width " + std::to_string(existence->cols) +
                  " does not match configured window 2*" + std::to_string(cfg_.vd));
      auto m = t.value(*existence);
      auto hid = t.relu(nn::linear(t, m, t.param(store_.get("coarse.w1")),
                                   t.param(store_.get("coarse.b1"))));
      auto temp = nn::linear(t, hid, t.param(store_.get("coarse.w2")),
                             t.param(store_.get("coarse.b2")));
      x = t.add(x, temp);
    } else {
      require(existence == nullptr, ErrorKind::config,
              "existence map supplied but coarse path disabled");
    }
    return x;
  }

  // Broadcast parent features to their children and, when enabled, add the
  // fine temporal context: W_t times the plain mean over the previous
  // frame's child-level codes in the window (absent cells contribute the
  // embedding of code 0, so the divisor is the full window size).
  //
  // fine_plan: per child, indices into the 256-row code-embedding table.
  nn::Tape::VarId child_features(nn::Tape& t, nn::Tape::VarId parent_feats,
                                 const std::vector<uint32_t>& parent_of,
                                 const nn::GatherPlan* fine_plan) {
    auto cf = t.gather_rows(parent_feats, parent_of);
    if (cfg_.use_fine) {
      require(fine_plan != nullptr, ErrorKind::config,
              "fine path enabled but no window plan supplied");
      auto table = t.param(store_.get(cfg_.share_embed && cfg_.use_sibling ? "temporal.embed"
                                                                           : "fine.embed"));
      auto mean = t.gather_mean(table, *fine_plan);
      auto temp = t.matmul_nt(mean, t.param(store_.get("fine.w")));
      cf = t.add(cf, temp);
    }
    return cf;
  }

  // Per-parent context from the already-decoded even children: mean over
  // the occupied even siblings of W_s [embed(code), position(i)], zero for
  // parents with no even child. group_plan's segments are parent rows, its
  // indices point into the even-child rows.
  nn::Tape::VarId sibling_context(nn::Tape& t, const std::vector<uint8_t>& even_codes,
                                  const std::vector<uint8_t>& even_index,
                                  const nn::GatherPlan& group_plan) {
    require(cfg_.use_sibling, ErrorKind::state, "sibling path disabled");
    require(even_codes.size() == even_index.size(), ErrorKind::invalid_argument,
            "sibling inputs misaligned");
    nn::Tensor2D pi(int(even_index.size()), 3);
    for (size_t i = 0; i < even_index.size(); ++i) {
      uint8_t idx = even_index[i];
      require(is_even_child(idx) && idx < 8, ErrorKind::invalid_argument,
              "child index " + std::to_string(int(idx)) + " is not in the even group");
      pi.at(int(i), 0) = float(idx & 1);
      pi.at(int(i), 1) = float((idx >> 1) & 1);
      pi.at(int(i), 2) = float((idx >> 2) & 1);
    }
    auto table = t.param(store_.get(cfg_.share_embed && cfg_.use_fine ? "temporal.embed"
                                                                      : "sib.embed"));
    auto emb = nn::embedding_lookup(t, table, widen(even_codes));
    auto cat = t.concat_cols(emb, t.value(std::move(pi)));
    auto proj = t.matmul_nt(cat, t.param(store_.get("sib.w")));
    return t.gather_mean(proj, group_plan);
  }

  nn::Tape::VarId s0_logits(nn::Tape& t, nn::Tape::VarId rows) {
    return head(t, rows, "head0");
  }

  // s1 is coded after s0, so its head may condition on the decoded low
  // nibble via an additive 16-entry embedding.
  nn::Tape::VarId s1_logits(nn::Tape& t, nn::Tape::VarId rows, const std::vector<uint8_t>& s0) {
    for (uint8_t v : s0)
      require(v < kClasses, ErrorKind::invalid_argument, "s0 nibble out of range");
    auto emb = nn::embedding_lookup(t, t.param(store_.get("head1.s0_embed")), widen(s0));
    return head(t, t.add(rows, emb), "head1");
  }

private:
  static std::vector<uint32_t> widen(const std::vector<uint8_t>& v) {
    return std::vector<uint32_t>(v.begin(), v.end());
  }

  nn::Tape::VarId head(nn::Tape& t, nn::Tape::VarId x, const std::string& name) {
    auto h = t.relu(nn::linear(t, x, t.param(store_.get(name + ".w1")),
                               t.param(store_.get(name + ".b1"))));
    return nn::linear(t, h, t.param(store_.get(name + ".w2")),
                      t.param(store_.get(name + ".b2")));
  }

  static void init(Rng& rng, nn::Param& p, int fan_in) { nn::init_uniform(p, rng, fan_in); }

  ModelConfig cfg_;
  nn::ParamStore store_;
};

}  // namespace hint
