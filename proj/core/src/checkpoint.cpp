// Copyright 2026 The xmcm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmcm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace xmcm {

namespace {

constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }

  void tensor(std::span<const std::size_t> dims, std::span<const double> values) {
    u32(static_cast<std::uint32_t>(dims.size()));
    for (std::size_t d : dims) u64(d);
    for (double v : values) f64(v);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, bytes);
  }

  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw CheckpointError(std::string("truncated ") + what);
  }

  std::vector<double> tensor(std::vector<std::size_t>& dims, std::uint32_t expected_rank, const char* what) {
    const std::uint32_t rank = u32();
    if (rank != expected_rank) {
      throw CheckpointError(std::string(what) + ": expected rank " + std::to_string(expected_rank) + ", found " +
                            std::to_string(rank));
    }
    dims.resize(rank);
    std::uint64_t count = 1;
    for (auto& d : dims) {
      const std::uint64_t v = u64();
      if (v == 0 || v > kMaxTensorElements || count * v > kMaxTensorElements) {
        throw CheckpointError(std::string(what) + ": implausible tensor dimension " + std::to_string(v));
      }
      d = static_cast<std::size_t>(v);
      count *= v;
    }
    std::vector<double> values(count);
    for (double& v : values) {
      v = f64();
      if (!std::isfinite(v)) throw CheckpointError(std::string(what) + ": non-finite value");
    }
    return values;
  }

 private:
  std::uint64_t le(int n) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    if (in_.gcount() != n) throw CheckpointError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& in_;
};

void write_config(Writer& w, const TrainConfig& cfg) {
  w.f64(cfg.loss.s);
  w.f64(cfg.loss.mu_lift);
  w.f64(cfg.loss.tau);
  w.f64(cfg.loss.alpha);
  w.f64(cfg.loss.beta);
  w.u64(static_cast<std::uint64_t>(cfg.loss.lift_kind));
  w.u64(static_cast<std::uint64_t>(cfg.loss.sim_kind));
  w.f64(cfg.learning_rate);
  w.f64(cfg.weight_decay);
  w.u64(cfg.batch_size);
  w.u64(cfg.epochs);
  w.u64(cfg.seed);
  w.f64(cfg.adam_beta1);
  w.f64(cfg.adam_beta2);
  w.f64(cfg.adam_eps);
}

TrainConfig read_config(Reader& r) {
  TrainConfig cfg;
  cfg.loss.s = r.f64();
  cfg.loss.mu_lift = r.f64();
  cfg.loss.tau = r.f64();
  cfg.loss.alpha = r.f64();
  cfg.loss.beta = r.f64();
  const std::uint64_t lift = r.u64();
  const std::uint64_t sim = r.u64();
  if (lift > static_cast<std::uint64_t>(LiftKind::ArcFace)) throw CheckpointError("unknown lift kind " + std::to_string(lift));
  if (sim > static_cast<std::uint64_t>(SimilarityKind::Off)) throw CheckpointError("unknown similarity kind " + std::to_string(sim));
  cfg.loss.lift_kind = static_cast<LiftKind>(lift);
  cfg.loss.sim_kind = static_cast<SimilarityKind>(sim);
  cfg.learning_rate = r.f64();
  cfg.weight_decay = r.f64();
  cfg.batch_size = r.u64();
  cfg.epochs = r.u64();
  cfg.seed = r.u64();
  cfg.adam_beta1 = r.f64();
  cfg.adam_beta2 = r.f64();
  cfg.adam_eps = r.f64();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid config block: ") + e.what());
  }
  return cfg;
}

void write_encoder(Writer& w, const EncoderParams& enc) {
  w.u32(static_cast<std::uint32_t>(enc.input_arity()));
  for (std::size_t d : enc.input_dims()) w.u64(d);
  w.u32(static_cast<std::uint32_t>(enc.layers().size()));
  for (const auto& layer : enc.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.activation));
    const std::size_t wdims[] = {layer.weight.rows(), layer.weight.cols()};
    w.tensor(wdims, layer.weight.span());
    const std::size_t bdims[] = {layer.bias.dim()};
    w.tensor(bdims, layer.bias.span());
  }
}

EncoderParams read_encoder(Reader& r, const char* which) {
  const std::uint32_t arity = r.u32();
  if (arity < 1 || arity > 2) throw CheckpointError(std::string(which) + " tower: invalid input arity");
  std::vector<std::size_t> input_dims(arity);
  for (auto& d : input_dims) d = static_cast<std::size_t>(r.u64());
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 1024) throw CheckpointError(std::string(which) + " tower: invalid layer count");
  std::vector<LayerParams> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t act = r.u32();
    if (act > static_cast<std::uint32_t>(Activation::ReLU)) {
      throw CheckpointError(std::string(which) + " tower: unknown activation");
    }
    std::vector<std::size_t> wdims, bdims;
    auto wvals = r.tensor(wdims, 2, "weight");
    auto bvals = r.tensor(bdims, 1, "bias");
    layers.push_back({Matrix(wdims[0], wdims[1], std::move(wvals)), Vector(std::move(bvals)),
                      static_cast<Activation>(act)});
  }
  try {
    return EncoderParams(std::move(input_dims), std::move(layers));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string(which) + " tower: " + e.what());
  }
}

}  // namespace

void save_checkpoint(const ModelState& model, const AdamState& adam, const TrainConfig& cfg, std::ostream& out) {
  Writer w(out);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_config(w, cfg);
  write_encoder(w, model.video);
  write_encoder(w, model.music);
  const std::size_t pdims[] = {model.prototype.rows(), model.prototype.cols()};
  w.tensor(pdims, model.prototype.span());

  const auto params = parameter_tensors(model);
  const bool fresh = adam.first_moment.empty();
  if (!fresh) {
    detail::require_same_dim(adam.first_moment.size(), params.size(), "save_checkpoint moments");
    detail::require_same_dim(adam.second_moment.size(), params.size(), "save_checkpoint moments");
  }
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* moments : {&adam.first_moment, &adam.second_moment}) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      const std::size_t dims[] = {params[t].size()};
      if (fresh) {
        const std::vector<double> zeros(params[t].size(), 0.0);
        w.tensor(dims, zeros);
      } else {
        detail::require_same_dim((*moments)[t].size(), params[t].size(), "save_checkpoint moment shape");
        w.tensor(dims, (*moments)[t]);
      }
    }
  }
  w.u64(adam.step);
  if (!out) throw CheckpointError("save_checkpoint: write failure");
}

void save_checkpoint(const ModelState& model, const AdamState& adam, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  save_checkpoint(model, adam, cfg, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, sizeof magic, "magic header");
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("bad magic header");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.config = read_config(r);
  ck.model.video = read_encoder(r, "video");
  ck.model.music = read_encoder(r, "music");
  std::vector<std::size_t> pdims;
  auto pvals = r.tensor(pdims, 2, "prototype");
  ck.model.prototype = Matrix(pdims[0], pdims[1], std::move(pvals));
  try {
    ck.model.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("inconsistent model: ") + e.what());
  }

  const auto params = parameter_tensors(std::as_const(ck.model));
  const std::uint32_t count = r.u32();
  if (count != params.size()) throw CheckpointError("moment tensor count does not match the model");
  for (auto* moments : {&ck.adam.first_moment, &ck.adam.second_moment}) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      std::vector<std::size_t> dims;
      moments->push_back(r.tensor(dims, 1, "moment"));
      if (dims[0] != params[t].size()) throw CheckpointError("moment tensor shape does not match the model");
    }
  }
  ck.adam.step = r.u64();
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "' for reading");
  try {
    return load_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

ModelShape shape_of(const ModelState& model) {
  ModelShape shape;
  shape.video_dim = model.video.input_dims().at(0);
  if (model.music.input_arity() == 2) {
    shape.music_low_dim = model.music.input_dims()[0];
    shape.music_high_dim = model.music.input_dims()[1];
  } else {
    shape.music_high_dim = model.music.input_dims()[0];
    shape.use_low_level = false;
  }
  shape.hidden.clear();
  const auto& layers = model.video.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) shape.hidden.push_back(layers[l].out_dim());
  shape.embedding_dim = model.embedding_dim();
  shape.n_classes = model.n_classes();
  return shape;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected) {
  Checkpoint ck = load_checkpoint(path);
  const ModelShape found = shape_of(ck.model);
  auto mismatch = [&](const std::string& field, std::size_t want, std::size_t got) {
    throw CheckpointError(path.string() + ": shape mismatch in " + field + ": session expects " +
                          std::to_string(want) + ", checkpoint has " + std::to_string(got));
  };
  if (found.embedding_dim != expected.embedding_dim) {
    mismatch("embedding_dim", expected.embedding_dim, found.embedding_dim);
  }
  if (found.n_classes != expected.n_classes) mismatch("n_classes", expected.n_classes, found.n_classes);
  if (found.video_dim != expected.video_dim) mismatch("video_dim", expected.video_dim, found.video_dim);
  if (found.use_low_level != expected.use_low_level) {
    mismatch("use_low_level", expected.use_low_level, found.use_low_level);
  }
  if (found.use_low_level && found.music_low_dim != expected.music_low_dim) {
    mismatch("music_low_dim", expected.music_low_dim, found.music_low_dim);
  }
  if (found.music_high_dim != expected.music_high_dim) {
    mismatch("music_high_dim", expected.music_high_dim, found.music_high_dim);
  }
  if (found.hidden != expected.hidden) throw CheckpointError(path.string() + ": shape mismatch in hidden layers");
  return ck;
}

}  // namespace xmcm
