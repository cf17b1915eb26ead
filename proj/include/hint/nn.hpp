#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hint/common.hpp"

namespace hint::nn {

struct Tensor2D {
  int rows = 0, cols = 0;
  std::vector<float> v;

  Tensor2D() = default;
  Tensor2D(int r, int c) : rows(r), cols(c), v(size_t(r) * size_t(c), 0.0f) {}

  static Tensor2D from(int r, int c, std::vector<float> data) {
    require(data.size() == size_t(r) * size_t(c), ErrorKind::invalid_argument,
            "tensor data length does not match shape");
    Tensor2D t;
    t.rows = r;
    t.cols = c;
    t.v = std::move(data);
    return t;
  }

  float& at(int r, int c) { return v[size_t(r) * cols + c]; }
  float at(int r, int c) const { return v[size_t(r) * cols + c]; }
  float* row(int r) { return v.data() + size_t(r) * cols; }
  const float* row(int r) const { return v.data() + size_t(r) * cols; }
  size_t count() const { return v.size(); }
  bool same_shape(const Tensor2D& o) const { return rows == o.rows && cols == o.cols; }
};

struct Param {
  std::string name;
  Tensor2D value;
  Tensor2D grad;
  Tensor2D adam_m, adam_v;
  bool grad_live = false;
};

// Named parameter tensors with gradients and optimizer state. Parameter
// order is insertion order and is part of the checkpoint format.
class ParamStore {
public:
  Param& add(const std::string& name, int rows, int cols) {
    require(index_.find(name) == index_.end(), ErrorKind::invalid_argument,
            "duplicate parameter name: " + name);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->value = Tensor2D(rows, cols);
    p->grad = Tensor2D(rows, cols);
    p->adam_m = Tensor2D(rows, cols);
    p->adam_v = Tensor2D(rows, cols);
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Param& get(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::invalid_argument, "unknown parameter: " + name);
    return *params_[it->second];
  }
  const Param& get(const std::string& name) const {
    return const_cast<ParamStore*>(this)->get(name);
  }

  size_t size() const { return params_.size(); }
  Param& at(size_t i) { return *params_[i]; }
  const Param& at(size_t i) const { return *params_[i]; }
  int64_t step() const { return step_; }

  void zero_grads() {
    for (auto& p : params_) {
      std::fill(p->grad.v.begin(), p->grad.v.end(), 0.0f);
      p->grad_live = false;
    }
  }

  // Adam with bias correction. Deterministic; clears gradients afterwards.
  void adam_step(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f) {
    bool any = false;
    for (auto& p : params_) any = any || p->grad_live;
    require(any, ErrorKind::state, "adam_step: no gradients populated");
    ++step_;
    float c1 = float(1.0 / (1.0 - std::pow(double(beta1), double(step_))));
    float c2 = float(1.0 / (1.0 - std::pow(double(beta2), double(step_))));
    for (auto& p : params_) {
      for (size_t i = 0; i < p->value.count(); ++i) {
        float g = p->grad.v[i];
        float m = p->adam_m.v[i] = beta1 * p->adam_m.v[i] + (1.0f - beta1) * g;
        float vv = p->adam_v.v[i] = beta2 * p->adam_v.v[i] + (1.0f - beta2) * g * g;
        p->value.v[i] -= lr * (m * c1) / (std::sqrt(vv * c2) + eps);
      }
    }
    zero_grads();
  }

  uint64_t fingerprint() const {
    uint64_t h = kFnvOffset;
    for (const auto& p : params_) {
      h = fnv1a(p->name.data(), p->name.size(), h);
      h = fnv1a_u64(uint64_t(uint32_t(p->value.rows)) | (uint64_t(uint32_t(p->value.cols)) << 32), h);
      h = fnv1a(p->value.v.data(), p->value.count() * sizeof(float), h);
    }
    return h;
  }

private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, size_t> index_;
  int64_t step_ = 0;
};

// --- Checkpoint container (see docs/FORMAT.md). Little-endian, bit-exact.

constexpr char kCheckpointMagic[8] = {'H', 'I', 'N', 'T', 'C', 'K', 'P', 'T'};
constexpr uint8_t kCheckpointVersion = 1;

inline void save_checkpoint(const ParamStore& store, uint64_t config_hash, const std::string& path) {
  ByteWriter w;
  w.bytes(kCheckpointMagic, 8);
  w.u8(kCheckpointVersion);
  w.u64(config_hash);
  w.u32(uint32_t(store.size()));
  for (size_t i = 0; i < store.size(); ++i) {
    const Param& p = store.at(i);
    w.u16(uint16_t(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.u32(uint32_t(p.value.rows));
    w.u32(uint32_t(p.value.cols));
    for (float f : p.value.v) w.f32(f);
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(w.data().data()), std::streamsize(w.data().size()));
  require(out.good(), ErrorKind::io, "short write: " + path);
}

struct Checkpoint {
  uint64_t config_hash = 0;
  std::vector<std::pair<std::string, Tensor2D>> tensors;
};

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open checkpoint: " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(raw);
  char magic[8];
  r.bytes(magic, 8);
  require(std::memcmp(magic, kCheckpointMagic, 8) == 0, ErrorKind::corrupt_stream,
          "not a checkpoint file: " + path);
  uint8_t version = r.u8();
  require(version == kCheckpointVersion, ErrorKind::corrupt_stream,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_hash = r.u64();
  uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = r.u16();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    int rows = int(r.u32());
    int cols = int(r.u32());
    require(rows >= 0 && cols >= 0 && uint64_t(rows) * uint64_t(cols) < (1ull << 28),
            ErrorKind::corrupt_stream, "implausible tensor shape in checkpoint");
    Tensor2D t(rows, cols);
    for (size_t k = 0; k < t.count(); ++k) t.v[k] = r.f32();
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

// Loads checkpoint values into an already-constructed store; names and
// shapes must match exactly.
inline uint64_t load_checkpoint(ParamStore& store, const std::string& path) {
  Checkpoint ck = read_checkpoint(path);
  require(ck.tensors.size() == store.size(), ErrorKind::config,
          "checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
              std::to_string(store.size()));
  for (size_t i = 0; i < ck.tensors.size(); ++i) {
    Param& p = store.at(i);
    require(ck.tensors[i].first == p.name, ErrorKind::config,
            "checkpoint tensor '" + ck.tensors[i].first + "' does not match model parameter '" +
                p.name + "'");
    require(ck.tensors[i].second.same_shape(p.value), ErrorKind::config,
            "shape mismatch for parameter '" + p.name + "'");
    p.value = std::move(ck.tensors[i].second);
  }
  return ck.config_hash;
}

// --- Reverse-mode tape.
//
// Nodes are created in topological order; backward walks them in reverse.
// Parameter leaves copy the current value in and accumulate into
// Param::grad on the way back, so several tapes may contribute gradients
// to one store before an optimizer step.

struct GatherPlan {
  // Output row s averages input rows indices[offsets[s]..offsets[s+1]) with
  // the given divisor; divisor 0 produces a zero row.
  std::vector<uint32_t> offsets;
  std::vector<uint32_t> indices;
  std::vector<float> divisors;
};

class Tape {
public:
  using VarId = int32_t;

  explicit Tape(bool track_grads = true) : track_(track_grads) {}

  bool tracking() const { return track_; }

  VarId value(Tensor2D t) {
    nodes_.push_back(Node{std::move(t)});
    return VarId(nodes_.size() - 1);
  }

  VarId param(Param& p) {
    VarId id = value(p.value);
    if (track_) {
      Param* pp = &p;
      nodes_[size_t(id)].back = [id, pp](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        for (size_t i = 0; i < g.count(); ++i) pp->grad.v[i] += g.v[i];
        pp->grad_live = true;
      };
    }
    return id;
  }

  const Tensor2D& val(VarId id) const { return nodes_[size_t(id)].val; }
  const Tensor2D& grad(VarId id) const { return nodes_[size_t(id)].grad; }

  // y = x * W^T, with W stored [out x in].
  VarId matmul_nt(VarId x, VarId w) {
    const Tensor2D& xv = val(x);
    const Tensor2D& wv = val(w);
    require(xv.cols == wv.cols, ErrorKind::invalid_argument,
            "matmul_nt: inner dimensions disagree");
    Tensor2D y(xv.rows, wv.rows);
    for (int n = 0; n < xv.rows; ++n) {
      const float* xr = xv.row(n);
      float* yr = y.row(n);
      for (int o = 0; o < wv.rows; ++o) {
        const float* wr = wv.row(o);
        float acc = 0.0f;
        for (int i = 0; i < xv.cols; ++i) acc += xr[i] * wr[i];
        yr[o] = acc;
      }
    }
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, x, w](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        const Tensor2D& xv = t.val(x);
        const Tensor2D& wv = t.val(w);
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        Tensor2D& gw = t.nodes_[size_t(w)].grad;
        for (int n = 0; n < xv.rows; ++n) {
          const float* gr = g.row(n);
          const float* xr = xv.row(n);
          float* gxr = gx.row(n);
          for (int o = 0; o < wv.rows; ++o) {
            float go = gr[o];
            if (go == 0.0f) continue;
            const float* wr = wv.row(o);
            float* gwr = gw.row(o);
            for (int i = 0; i < xv.cols; ++i) {
              gxr[i] += go * wr[i];
              gwr[i] += go * xr[i];
            }
          }
        }
      };
    }
    return id;
  }

  VarId add_bias(VarId x, VarId b) {
    const Tensor2D& xv = val(x);
    const Tensor2D& bv = val(b);
    require(bv.rows == 1 && bv.cols == xv.cols, ErrorKind::invalid_argument,
            "add_bias: bias must be [1 x cols]");
    Tensor2D y = xv;
    for (int n = 0; n < y.rows; ++n) {
      float* yr = y.row(n);
      for (int c = 0; c < y.cols; ++c) yr[c] += bv.v[size_t(c)];
    }
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, x, b](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        Tensor2D& gb = t.nodes_[size_t(b)].grad;
        for (size_t i = 0; i < g.count(); ++i) gx.v[i] += g.v[i];
        for (int n = 0; n < g.rows; ++n) {
          const float* gr = g.row(n);
          for (int c = 0; c < g.cols; ++c) gb.v[size_t(c)] += gr[c];
        }
      };
    }
    return id;
  }

  VarId add(VarId a, VarId b) {
    const Tensor2D& av = val(a);
    const Tensor2D& bv = val(b);
    require(av.same_shape(bv), ErrorKind::invalid_argument, "add: shape mismatch");
    Tensor2D y = av;
    for (size_t i = 0; i < y.count(); ++i) y.v[i] += bv.v[i];
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, a, b](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& ga = t.nodes_[size_t(a)].grad;
        Tensor2D& gb = t.nodes_[size_t(b)].grad;
        for (size_t i = 0; i < g.count(); ++i) {
          ga.v[i] += g.v[i];
          gb.v[i] += g.v[i];
        }
      };
    }
    return id;
  }

  VarId relu(VarId x) {
    Tensor2D y = val(x);
    for (float& f : y.v) f = f > 0.0f ? f : 0.0f;
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, x](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        const Tensor2D& xv = t.val(x);
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        for (size_t i = 0; i < g.count(); ++i)
          if (xv.v[i] > 0.0f) gx.v[i] += g.v[i];
      };
    }
    return id;
  }

  VarId scale(VarId x, float s) {
    Tensor2D y = val(x);
    for (float& f : y.v) f *= s;
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, x, s](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        for (size_t i = 0; i < g.count(); ++i) gx.v[i] += s * g.v[i];
      };
    }
    return id;
  }

  VarId gather_rows(VarId x, std::vector<uint32_t> idx) {
    const Tensor2D& xv = val(x);
    Tensor2D y(int(idx.size()), xv.cols);
    for (size_t m = 0; m < idx.size(); ++m) {
      require(idx[m] < uint32_t(xv.rows), ErrorKind::invalid_argument,
              "gather_rows: index out of range");
      std::memcpy(y.row(int(m)), xv.row(int(idx[m])), sizeof(float) * size_t(xv.cols));
    }
    VarId id = value(std::move(y));
    if (track_) {
      auto ids = std::make_shared<std::vector<uint32_t>>(std::move(idx));
      nodes_[size_t(id)].back = [id, x, ids](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        for (size_t m = 0; m < ids->size(); ++m) {
          const float* gr = g.row(int(m));
          float* gxr = gx.row(int((*ids)[m]));
          for (int c = 0; c < g.cols; ++c) gxr[c] += gr[c];
        }
      };
    }
    return id;
  }

  VarId gather_mean(VarId x, GatherPlan plan) {
    const Tensor2D& xv = val(x);
    int segments = int(plan.divisors.size());
    require(plan.offsets.size() == size_t(segments) + 1, ErrorKind::invalid_argument,
            "gather_mean: bad plan");
    Tensor2D y(segments, xv.cols);
    for (int s = 0; s < segments; ++s) {
      if (plan.divisors[size_t(s)] == 0.0f) continue;
      float inv = 1.0f / plan.divisors[size_t(s)];
      float* yr = y.row(s);
      for (uint32_t k = plan.offsets[size_t(s)]; k < plan.offsets[size_t(s) + 1]; ++k) {
        const float* xr = xv.row(int(plan.indices[k]));
        for (int c = 0; c < xv.cols; ++c) yr[c] += xr[c];
      }
      for (int c = 0; c < xv.cols; ++c) yr[c] *= inv;
    }
    VarId id = value(std::move(y));
    if (track_) {
      auto pl = std::make_shared<GatherPlan>(std::move(plan));
      nodes_[size_t(id)].back = [id, x, pl](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& gx = t.nodes_[size_t(x)].grad;
        for (size_t s = 0; s < pl->divisors.size(); ++s) {
          if (pl->divisors[s] == 0.0f) continue;
          float inv = 1.0f / pl->divisors[s];
          const float* gr = g.row(int(s));
          for (uint32_t k = pl->offsets[s]; k < pl->offsets[s + 1]; ++k) {
            float* gxr = gx.row(int(pl->indices[k]));
            for (int c = 0; c < g.cols; ++c) gxr[c] += gr[c] * inv;
          }
        }
      };
    }
    return id;
  }

  VarId concat_cols(VarId a, VarId b) {
    const Tensor2D& av = val(a);
    const Tensor2D& bv = val(b);
    require(av.rows == bv.rows, ErrorKind::invalid_argument, "concat_cols: row mismatch");
    Tensor2D y(av.rows, av.cols + bv.cols);
    for (int n = 0; n < av.rows; ++n) {
      std::memcpy(y.row(n), av.row(n), sizeof(float) * size_t(av.cols));
      std::memcpy(y.row(n) + av.cols, bv.row(n), sizeof(float) * size_t(bv.cols));
    }
    VarId id = value(std::move(y));
    if (track_) {
      nodes_[size_t(id)].back = [id, a, b](Tape& t) {
        const Tensor2D& g = t.nodes_[size_t(id)].grad;
        Tensor2D& ga = t.nodes_[size_t(a)].grad;
        Tensor2D& gb = t.nodes_[size_t(b)].grad;
        for (int n = 0; n < g.rows; ++n) {
          const float* gr = g.row(n);
          float* gar = ga.row(n);
          float* gbr = gb.row(n);
          for (int c = 0; c < ga.cols; ++c) gar[c] += gr[c];
          for (int c = 0; c < gb.cols; ++c) gbr[c] += gr[c + ga.cols];
        }
      };
    }
    return id;
  }

  // Mean over rows where mask is nonzero; all-zero mask gives the zero
  // vector (graceful "no information" fallback).
  VarId masked_mean(VarId x, const std::vector<uint8_t>& mask) {
    const Tensor2D& xv = val(x);
    require(mask.size() == size_t(xv.rows), ErrorKind::invalid_argument,
            "masked_mean: mask length mismatch");
    GatherPlan plan;
    plan.offsets = {0};
    for (uint32_t i = 0; i < mask.size(); ++i)
      if (mask[i]) plan.indices.push_back(i);
    plan.offsets.push_back(uint32_t(plan.indices.size()));
    plan.divisors.push_back(float(plan.indices.size()));
    return gather_mean(x, std::move(plan));
  }

  // Mean cross-entropy in bits: mean over rows of -log2 softmax(logits)[target].
  VarId softmax_cross_entropy(VarId logits, const std::vector<uint8_t>& targets) {
    const Tensor2D& lv = val(logits);
    require(targets.size() == size_t(lv.rows), ErrorKind::invalid_argument,
            "softmax_cross_entropy: target count mismatch");
    require(lv.rows > 0, ErrorKind::invalid_argument, "softmax_cross_entropy: empty batch");
    const float inv_ln2 = 1.4426950408889634f;
    double total = 0.0;
    for (int n = 0; n < lv.rows; ++n) {
      const float* r = lv.row(n);
      require(targets[size_t(n)] < uint8_t(lv.cols), ErrorKind::invalid_argument,
              "softmax_cross_entropy: target out of range");
      float m = r[0];
      for (int c = 1; c < lv.cols; ++c) m = std::max(m, r[c]);
      float sum = 0.0f;
      for (int c = 0; c < lv.cols; ++c) sum += std::exp(r[c] - m);
      total += double((m + std::log(sum) - r[targets[size_t(n)]]) * inv_ln2);
    }
    Tensor2D y(1, 1);
    y.v[0] = float(total / lv.rows);
    VarId id = value(std::move(y));
    if (track_) {
      auto tg = std::make_shared<std::vector<uint8_t>>(targets);
      nodes_[size_t(id)].back = [id, logits, tg, inv_ln2](Tape& t) {
        float up = t.nodes_[size_t(id)].grad.v[0];
        if (up == 0.0f) return;
        const Tensor2D& lv = t.val(logits);
        Tensor2D& gl = t.nodes_[size_t(logits)].grad;
        float w = up * inv_ln2 / float(lv.rows);
        for (int n = 0; n < lv.rows; ++n) {
          const float* r = lv.row(n);
          float* gr = gl.row(n);
          float m = r[0];
          for (int c = 1; c < lv.cols; ++c) m = std::max(m, r[c]);
          float sum = 0.0f;
          for (int c = 0; c < lv.cols; ++c) sum += std::exp(r[c] - m);
          float inv = 1.0f / sum;
          for (int c = 0; c < lv.cols; ++c) {
            float p = std::exp(r[c] - m) * inv;
            gr[c] += w * (p - (c == (*tg)[size_t(n)] ? 1.0f : 0.0f));
          }
        }
      };
    }
    return id;
  }

  void backward(VarId root, float seed = 1.0f) {
    require(track_, ErrorKind::state, "backward on a non-tracking tape");
    const Tensor2D& rv = val(root);
    require(rv.rows == 1 && rv.cols == 1, ErrorKind::invalid_argument,
            "backward root must be a scalar");
    for (auto& n : nodes_)
      if (n.grad.v.empty()) n.grad = Tensor2D(n.val.rows, n.val.cols);
    nodes_[size_t(root)].grad.v[0] = seed;
    for (size_t i = nodes_.size(); i-- > 0;)
      if (nodes_[i].back) nodes_[i].back(*this);
  }

  size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    Tensor2D val;
    Tensor2D grad;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;
  bool track_;
};

// linear(x, W, b) = x * W^T + b; pass null bias for projection-only layers.
inline Tape::VarId linear(Tape& t, Tape::VarId x, Tape::VarId w, Tape::VarId b = -1) {
  Tape::VarId y = t.matmul_nt(x, w);
  return b < 0 ? y : t.add_bias(y, b);
}

inline Tape::VarId embedding_lookup(Tape& t, Tape::VarId table, const std::vector<uint32_t>& ids) {
  return t.gather_rows(table, ids);
}

// Forward-only row softmax, for probability extraction at coding time.
inline Tensor2D softmax_rows(const Tensor2D& logits) {
  Tensor2D p(logits.rows, logits.cols);
  for (int n = 0; n < logits.rows; ++n) {
    const float* r = logits.row(n);
    float* pr = p.row(n);
    float m = r[0];
    for (int c = 1; c < logits.cols; ++c) m = std::max(m, r[c]);
    float sum = 0.0f;
    for (int c = 0; c < logits.cols; ++c) {
      pr[c] = std::exp(r[c] - m);
      sum += pr[c];
    }
    float inv = 1.0f / sum;
    for (int c = 0; c < logits.cols; ++c) pr[c] *= inv;
  }
  return p;
}

inline void init_uniform(Param& p, Rng& rng, int fan_in) {
  float bound = 1.0f / std::sqrt(float(fan_in));
  for (float& f : p.value.v) f = rng.next_uniform(-bound, bound);
}

}  // namespace hint::nn
