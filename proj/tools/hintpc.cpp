// hintpc: encode/decode dynamic point-cloud geometry losslessly, train the
// context model, and benchmark round trips.
//
// Exit codes: 0 success, 2 argument/file parse error, 3 configuration or
// state mismatch, 4 corrupt bitstream, 5 verification failure, 6 I/O error.
// HINTPC_LOG=quiet|info|debug selects stderr verbosity (default info).

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hint/codec.hpp"
#include "hint/ply_io.hpp"
#include "hint/stats_csv.hpp"
#include "hint/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hint;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };
LogLevel g_log = LogLevel::info;

void init_log() {
  const char* e = std::getenv("HINTPC_LOG");
  if (!e) return;
  std::string v(e);
  if (v == "quiet") g_log = LogLevel::quiet;
  else if (v == "info") g_log = LogLevel::info;
  else if (v == "debug") g_log = LogLevel::debug;
  else std::cerr << "hintpc: ignoring unknown HINTPC_LOG value '" << v << "'\n";
}

void log_info(const std::string& msg) {
  if (g_log >= LogLevel::info) std::cerr << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (g_log >= LogLevel::debug) std::cerr << msg << "\n";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return 2;
    case ErrorKind::invalid_argument:
    case ErrorKind::config:
    case ErrorKind::state: return 3;
    case ErrorKind::corrupt_stream: return 4;
    case ErrorKind::verification: return 5;
    case ErrorKind::io: return 6;
  }
  return 1;
}

// model/codec flags shared by the coding subcommands
struct ModelFlags {
  int depth = 10;
  int vd = 27;
  int vfine = 125;
  bool no_coarse = false, no_fine = false, no_sibling = false, spatial_only = false;
  uint64_t seed = 1;
  std::string checkpoint;
  int jobs = 1;
};

void add_model_flags(CLI::App* sub, ModelFlags& f, bool with_depth = true) {
  if (with_depth)
    sub->add_option("--depth", f.depth, "Quantization/tree depth in bits per axis")
        ->check(CLI::Range(1, 21))
        ->capture_default_str();
  sub->add_option("--vd", f.vd, "Existence-map neighborhood size")
      ->check(CLI::IsMember({7, 27, 125}))
      ->capture_default_str();
  sub->add_option("--vfine", f.vfine, "Fine temporal neighborhood size")
      ->check(CLI::IsMember({7, 27, 125}))
      ->capture_default_str();
  sub->add_flag("--no-coarse", f.no_coarse, "Disable the coarse temporal context");
  sub->add_flag("--no-fine", f.no_fine, "Disable the fine temporal context");
  sub->add_flag("--no-sibling", f.no_sibling, "Disable the even-sibling context");
  sub->add_flag("--spatial-only", f.spatial_only,
                "Disable all temporal and sibling contexts (ablation baseline)");
  sub->add_option("--seed", f.seed, "Weight initialization seed")->capture_default_str();
  sub->add_option("--checkpoint", f.checkpoint, "Model checkpoint to load");
  sub->add_option("--jobs", f.jobs,
                  "Worker count (accepted for compatibility; frames are coded "
                  "serially because temporal state chains them)")
      ->check(CLI::PositiveNumber);
}

ModelConfig model_config(const ModelFlags& f) {
  ModelConfig m;
  m.vd = uint8_t(f.vd);
  m.vfine = uint8_t(f.vfine);
  m.use_coarse = !(f.no_coarse || f.spatial_only);
  m.use_fine = !(f.no_fine || f.spatial_only);
  m.use_sibling = !(f.no_sibling || f.spatial_only);
  return m;
}

HintModel build_model(const ModelConfig& mc, const ModelFlags& f) {
  HintModel model(mc, f.seed);
  if (!f.checkpoint.empty()) {
    uint64_t h = nn::load_checkpoint(model.params(), f.checkpoint);
    require(h == mc.hash(), ErrorKind::config,
            "checkpoint '" + f.checkpoint + "' was trained with a different model architecture");
    log_debug("loaded checkpoint " + f.checkpoint);
  }
  return model;
}

// expand files/directories into an ordered frame list
std::vector<fs::path> collect_inputs(const std::vector<std::string>& inputs,
                                     const std::string& ext, const std::string& order_file) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> dir;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ext) dir.push_back(e.path());
      std::sort(dir.begin(), dir.end(),
                [](const fs::path& a, const fs::path& b) { return a.filename().string() <
                                                                  b.filename().string(); });
      files.insert(files.end(), dir.begin(), dir.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      raise(ErrorKind::io, "input not found: " + in);
    }
  }
  if (files.empty()) raise(ErrorKind::io, "no " + ext + " inputs found");

  if (!order_file.empty()) {
    std::ifstream of(order_file);
    if (!of) raise(ErrorKind::io, "cannot open order file " + order_file);
    std::vector<fs::path> ordered;
    std::string line;
    size_t lineno = 0;
    while (std::getline(of, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto it = std::find_if(files.begin(), files.end(), [&](const fs::path& f) {
        return f.filename().string() == line || f.string() == line;
      });
      if (it == files.end())
        raise(ErrorKind::parse,
              order_file + ":" + std::to_string(lineno) + ": unknown frame '" + line + "'");
      ordered.push_back(*it);
    }
    if (ordered.empty())
      raise(ErrorKind::parse, order_file + ": no frames listed");
    return ordered;
  }
  return files;
}

std::vector<uint8_t> read_binary(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + p.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_binary(const fs::path& p, const std::vector<uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot open " + p.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) raise(ErrorKind::io, "write failed for " + p.string());
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct Dataset {
  std::vector<SortedVoxelSet> frames;
  std::vector<std::string> names;
  std::vector<size_t> source_points;  // pre-dedup counts
};

// a dataset argument is either a directory of PLY frames (one joint grid fit
// for the whole sequence) or synthetic:<kind>
Dataset load_dataset(const std::string& arg, int depth, int frames, int points, uint64_t seed,
                     const std::string& order_file) {
  Dataset d;
  if (arg.rfind("synthetic:", 0) == 0) {
    Motion m = motion_from_name(arg.substr(10));
    d.frames = make_sequence(m, frames, depth, points, seed);
    for (size_t i = 0; i < d.frames.size(); ++i) {
      d.names.push_back(arg + "#" + std::to_string(i));
      d.source_points.push_back(size_t(points));
    }
    return d;
  }
  auto files = collect_inputs({arg}, ".ply", order_file);
  std::vector<PointCloud> clouds;
  clouds.reserve(files.size());
  for (const auto& f : files) {
    clouds.push_back(read_ply(f.string()));
    d.names.push_back(f.stem().string());
    d.source_points.push_back(clouds.back().points.size());
    log_debug("read " + f.string() + ": " + std::to_string(clouds.back().points.size()) +
              " points");
  }
  std::vector<const PointCloud*> ptrs;
  for (const auto& c : clouds) ptrs.push_back(&c);
  GridTransform t = sequence_transform(ptrs, depth);
  if (!t.passthrough)
    log_info("quantizing to " + std::to_string(depth) + " bits (step " + std::to_string(t.scale) +
             " source units)");
  for (const auto& c : clouds) d.frames.push_back(apply_transform(c, t, depth));
  return d;
}

std::string human_row(const FrameRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "frame %u: %llu points, %llu voxels, %llu payload bits, bpp %.4f, "
                "enc %.1f ms, dec %.1f ms",
                r.frame, (unsigned long long)r.points, (unsigned long long)r.voxels,
                (unsigned long long)r.payload_bits, r.bpp_payload(), r.encode_ms, r.decode_ms);
  return buf;
}

void summarize(const std::vector<FrameRow>& rows, std::ostream& out) {
  double bpp = 0, bppt = 0, enc = 0, dec = 0;
  uint64_t bits = 0;
  for (const auto& r : rows) {
    bpp += r.bpp_payload();
    bppt += r.bpp_total();
    enc += r.encode_ms;
    dec += r.decode_ms;
    bits += r.header_bits + r.payload_bits;
  }
  double n = double(rows.size());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu frames, %llu total bits, mean bpp %.4f (payload) / %.4f (with headers), "
                "mean enc %.1f ms, mean dec %.1f ms",
                rows.size(), (unsigned long long)bits, bpp / n, bppt / n, enc / n, dec / n);
  out << buf << "\n";
}

int run_encode(const std::vector<std::string>& inputs, const std::string& out_dir,
               const std::string& csv, const std::string& order_file, const ModelFlags& f) {
  auto files = collect_inputs(inputs, ".ply", order_file);
  std::vector<PointCloud> clouds;
  for (const auto& p : files) clouds.push_back(read_ply(p.string()));
  std::vector<const PointCloud*> ptrs;
  for (const auto& c : clouds) ptrs.push_back(&c);
  GridTransform t = sequence_transform(ptrs, f.depth);
  if (!t.passthrough)
    log_info("inputs are not on an integer grid; fitting a shared " + std::to_string(f.depth) +
             "-bit grid over the sequence");

  ModelConfig mc = model_config(f);
  HintModel model = build_model(mc, f);
  CodecConfig cfg;
  cfg.depth = f.depth;
  cfg.model = mc;
  fs::create_directories(out_dir);

  FrameState state;
  std::vector<FrameRow> rows;
  for (size_t i = 0; i < files.size(); ++i) {
    SortedVoxelSet voxels = apply_transform(clouds[i], t, f.depth);
    auto t0 = std::chrono::steady_clock::now();
    EncodeResult enc = encode_frame(model, cfg, voxels, state, uint32_t(i));
    double ms = ms_since(t0);
    fs::path out = fs::path(out_dir) / (files[i].stem().string() + ".hint");
    write_binary(out, enc.bytes);
    state.has = true;
    state.pyr = enc.pyramid;

    FrameRow r;
    r.frame = uint32_t(i);
    r.points = clouds[i].points.size();
    r.voxels = voxels.size();
    r.header_bits = enc.stats.header_bytes * 8;
    r.payload_bits = enc.stats.payload_bytes * 8;
    r.encode_ms = ms;
    r.state_hash = enc.stats.state_hash;
    rows.push_back(r);
    log_info(human_row(r) + " -> " + out.string());
  }
  if (!csv.empty()) write_csv(csv, rows);
  summarize(rows, std::cout);
  return 0;
}

int run_decode(const std::vector<std::string>& inputs, const std::string& out_dir,
               const std::string& csv, const std::string& order_file, ModelFlags f) {
  auto files = collect_inputs(inputs, ".hint", order_file);

  // the stream header fixes the architecture; the checkpoint or seed must
  // supply matching weights
  auto first = read_binary(files[0]);
  ByteReader rd(first.data(), first.size());
  FrameHeader h = read_frame(rd).header;
  ModelConfig mc;
  mc.vd = h.vd;
  mc.vfine = h.vfine;
  mc.channels = h.channels;
  mc.use_coarse = h.use_coarse;
  mc.use_fine = h.use_fine;
  mc.use_sibling = h.use_sibling;
  HintModel model = build_model(mc, f);
  CodecConfig cfg;
  cfg.depth = h.depth;
  cfg.model = mc;
  fs::create_directories(out_dir);

  FrameState state;
  std::vector<FrameRow> rows;
  for (size_t i = 0; i < files.size(); ++i) {
    auto bytes = i == 0 ? std::move(first) : read_binary(files[i]);
    auto t0 = std::chrono::steady_clock::now();
    DecodeResult dec = decode_frame(model, cfg, bytes, state);
    double ms = ms_since(t0);
    fs::path out = fs::path(out_dir) / (files[i].stem().string() + ".ply");
    write_ply(out.string(), to_cloud(dec.leaves));
    state.has = true;
    state.pyr = dec.pyramid;

    FrameRow r;
    r.frame = uint32_t(i);
    r.points = dec.leaves.size();  // source point count is not in the stream
    r.voxels = dec.leaves.size();
    r.header_bits = dec.stats.header_bytes * 8;
    r.payload_bits = dec.stats.payload_bytes * 8;
    r.decode_ms = ms;
    r.state_hash = dec.stats.state_hash;
    rows.push_back(r);
    log_info(human_row(r) + " -> " + out.string());
  }
  if (!csv.empty()) write_csv(csv, rows);
  summarize(rows, std::cout);
  return 0;
}

int run_train(const std::string& dataset, int steps, float lr, const std::string& out_ckpt,
              const std::string& epoch_dir, int frames, int points, const std::string& order_file,
              const ModelFlags& f) {
  Dataset d = load_dataset(dataset, f.depth, frames, points, f.seed, order_file);
  ModelConfig mc = model_config(f);
  CodecConfig cfg;
  cfg.depth = f.depth;
  cfg.model = mc;
  cfg.seed = f.seed;
  HintModel model = build_model(mc, f);  // --checkpoint resumes training

  auto samples = make_train_set({d.frames}, cfg);
  log_info("training on " + std::to_string(samples.size()) + " frames for " +
           std::to_string(steps) + " steps");
  TrainOptions opt;
  opt.steps = steps;
  opt.lr = lr;
  opt.checkpoint_dir = epoch_dir;
  opt.log_every = std::max(1, steps / 20);
  opt.on_log = [](int step, double bits) {
    log_info("step " + std::to_string(step) + ": " + std::to_string(bits) + " bits/code");
  };
  TrainResult res = train(model, samples, opt);
  nn::save_checkpoint(model.params(), mc.hash(), out_ckpt);
  char buf[160];
  std::snprintf(buf, sizeof buf, "loss %.4f -> %.4f bits/code; checkpoint written to %s",
                res.loss_curve.front(), res.loss_curve.back(), out_ckpt.c_str());
  std::cout << buf << "\n";
  return 0;
}

int run_bench(const std::string& dataset, const std::string& csv, int frames, int points,
              const std::string& order_file, const ModelFlags& f) {
  Dataset d = load_dataset(dataset, f.depth, frames, points, f.seed, order_file);
  ModelConfig mc = model_config(f);
  HintModel enc_model = build_model(mc, f);
  HintModel dec_model = build_model(mc, f);  // independent instance, as a real decoder would be
  CodecConfig cfg;
  cfg.depth = f.depth;
  cfg.model = mc;

  FrameState enc_state, dec_state;
  std::vector<FrameRow> rows;
  for (size_t i = 0; i < d.frames.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    EncodeResult enc = encode_frame(enc_model, cfg, d.frames[i], enc_state, uint32_t(i));
    double ems = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    DecodeResult dec = decode_frame(dec_model, cfg, enc.bytes, dec_state);
    double dms = ms_since(t0);
    if (!(dec.leaves == d.frames[i]))
      raise(ErrorKind::verification, "round trip mismatch on frame " + std::to_string(i) + " (" +
                                         d.names[i] + ")");
    enc_state.has = dec_state.has = true;
    enc_state.pyr = enc.pyramid;
    dec_state.pyr = dec.pyramid;

    FrameRow r;
    r.frame = uint32_t(i);
    r.points = d.source_points[i];
    r.voxels = d.frames[i].size();
    r.header_bits = enc.stats.header_bytes * 8;
    r.payload_bits = enc.stats.payload_bytes * 8;
    r.encode_ms = ems;
    r.decode_ms = dms;
    r.state_hash = enc.stats.state_hash;
    rows.push_back(r);
    std::cout << human_row(r) << " [round trip ok]\n";
  }
  if (!csv.empty()) write_csv(csv, rows);
  summarize(rows, std::cout);
  return 0;
}

int run_verify(const std::string& orig_dir, const std::string& decoded_dir, int depth,
               const std::string& order_file) {
  auto orig = collect_inputs({orig_dir}, ".ply", order_file);
  auto deco = collect_inputs({decoded_dir}, ".ply", "");
  if (orig.size() != deco.size()) {
    std::cout << "verify: frame count differs (" << orig.size() << " original, " << deco.size()
              << " decoded)\n";
    return 5;
  }
  std::vector<PointCloud> oc, dc;
  for (const auto& p : orig) oc.push_back(read_ply(p.string()));
  for (const auto& p : deco) dc.push_back(read_ply(p.string()));
  std::vector<const PointCloud*> optr, dptr;
  for (const auto& c : oc) optr.push_back(&c);
  for (const auto& c : dc) dptr.push_back(&c);
  GridTransform ot = sequence_transform(optr, depth);
  GridTransform dt = sequence_transform(dptr, depth);

  int failures = 0;
  for (size_t i = 0; i < oc.size(); ++i) {
    SortedVoxelSet a = apply_transform(oc[i], ot, depth);
    SortedVoxelSet b = apply_transform(dc[i], dt, depth);
    bool ok = a == b;
    std::cout << "frame " << i << " (" << orig[i].filename().string() << "): "
              << (ok ? "ok" : "MISMATCH") << "\n";
    if (!ok) ++failures;
  }
  if (failures) {
    std::cout << "verify: " << failures << " of " << oc.size() << " frames differ\n";
    return 5;
  }
  std::cout << "verify: all " << oc.size() << " frames identical\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log();
  CLI::App app{"hintpc: lossless dynamic point-cloud geometry codec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hintpc 1.0");

  // encode
  auto* enc = app.add_subcommand("encode", "Encode PLY frames to .hint bitstreams");
  std::vector<std::string> enc_inputs;
  std::string enc_out = ".", enc_csv, enc_order;
  ModelFlags enc_f;
  enc->add_option("inputs", enc_inputs, "PLY files or directories")->required();
  enc->add_option("-o,--out", enc_out, "Output directory")->capture_default_str();
  enc->add_option("--csv", enc_csv, "Write per-frame statistics CSV");
  enc->add_option("--order-file", enc_order, "File listing frame order, one name per line");
  add_model_flags(enc, enc_f);

  // decode
  auto* dec = app.add_subcommand("decode", "Decode .hint bitstreams back to PLY");
  std::vector<std::string> dec_inputs;
  std::string dec_out = ".", dec_csv, dec_order;
  ModelFlags dec_f;
  dec->add_option("inputs", dec_inputs, ".hint files or directories")->required();
  dec->add_option("-o,--out", dec_out, "Output directory")->capture_default_str();
  dec->add_option("--csv", dec_csv, "Write per-frame statistics CSV");
  dec->add_option("--order-file", dec_order, "File listing frame order, one name per line");
  dec->add_option("--seed", dec_f.seed, "Weight seed (must match the encoder when no checkpoint)")
      ->capture_default_str();
  dec->add_option("--checkpoint", dec_f.checkpoint, "Model checkpoint to load");
  dec->add_option("--jobs", dec_f.jobs, "Worker count (accepted; decoding is serial)")
      ->check(CLI::PositiveNumber);

  // train
  auto* tr = app.add_subcommand("train", "Train the context model on a sequence");
  std::string tr_data, tr_ckpt = "hintpc.ckpt", tr_epoch_dir, tr_order;
  int tr_steps = 5000, tr_frames = 8, tr_points = 2000;
  float tr_lr = 1e-3f;
  ModelFlags tr_f;
  tr->add_option("dataset", tr_data, "PLY directory or synthetic:<still|translate|jitter|morph|random>")
      ->required();
  tr->add_option("--steps", tr_steps, "Optimization steps")->capture_default_str();
  tr->add_option("--lr", tr_lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--out", tr_ckpt, "Checkpoint to write")->capture_default_str();
  tr->add_option("--epoch-dir", tr_epoch_dir, "Directory for per-epoch checkpoints");
  tr->add_option("--frames", tr_frames, "Synthetic frame count")->capture_default_str();
  tr->add_option("--points", tr_points, "Synthetic points per frame")->capture_default_str();
  tr->add_option("--order-file", tr_order, "File listing frame order, one name per line");
  add_model_flags(tr, tr_f);

  // bench
  auto* be = app.add_subcommand("bench", "Encode+decode a dataset and report rate/latency");
  std::string be_data, be_csv, be_order;
  int be_frames = 8, be_points = 2000;
  ModelFlags be_f;
  be->add_option("dataset", be_data, "PLY directory or synthetic:<kind>")->required();
  be->add_option("--csv", be_csv, "Write per-frame statistics CSV");
  be->add_option("--frames", be_frames, "Synthetic frame count")->capture_default_str();
  be->add_option("--points", be_points, "Synthetic points per frame")->capture_default_str();
  be->add_option("--order-file", be_order, "File listing frame order, one name per line");
  add_model_flags(be, be_f);

  // verify
  auto* ve = app.add_subcommand("verify", "Compare two PLY directories as voxel sets");
  std::string ve_orig, ve_deco, ve_order;
  int ve_depth = 10;
  ve->add_option("original", ve_orig, "Directory of original PLY frames")->required();
  ve->add_option("decoded", ve_deco, "Directory of decoded PLY frames")->required();
  ve->add_option("--depth", ve_depth, "Quantization depth")->check(CLI::Range(1, 21))
      ->capture_default_str();
  ve->add_option("--order-file", ve_order, "File listing frame order, one name per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (enc->parsed()) return run_encode(enc_inputs, enc_out, enc_csv, enc_order, enc_f);
    if (dec->parsed()) return run_decode(dec_inputs, dec_out, dec_csv, dec_order, dec_f);
    if (tr->parsed())
      return run_train(tr_data, tr_steps, tr_lr, tr_ckpt, tr_epoch_dir, tr_frames, tr_points,
                       tr_order, tr_f);
    if (be->parsed()) return run_bench(be_data, be_csv, be_frames, be_points, be_order, be_f);
    if (ve->parsed()) return run_verify(ve_orig, ve_deco, ve_depth, ve_order);
  } catch (const Error& e) {
    std::cerr << "hintpc: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "hintpc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
