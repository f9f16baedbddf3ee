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

#include "xmcm/model.hpp"

#include <cmath>

namespace xmcm {

namespace {

std::vector<std::size_t> tower_layers(const ModelShape& shape) {
  std::vector<std::size_t> sizes = shape.hidden;
  sizes.push_back(shape.embedding_dim);
  return sizes;
}

}  // namespace

EncoderSpec ModelShape::video_spec() const { return {{video_dim}, tower_layers(*this)}; }

EncoderSpec ModelShape::music_spec() const {
  if (use_low_level) return {{music_low_dim, music_high_dim}, tower_layers(*this)};
  return {{music_high_dim}, tower_layers(*this)};
}

void ModelShape::validate() const {
  if (video_dim == 0 || music_high_dim == 0 || (use_low_level && music_low_dim == 0)) {
    throw DimensionError("ModelShape: input dimensions must be positive");
  }
  if (embedding_dim == 0) throw DimensionError("ModelShape: embedding dimension must be positive");
  if (n_classes == 0) throw DimensionError("ModelShape: at least one training class required");
  for (std::size_t h : hidden) {
    if (h == 0) throw DimensionError("ModelShape: hidden sizes must be positive");
  }
}

ModelShape shape_for(const Dataset& data, std::vector<std::size_t> hidden, std::size_t embedding_dim,
                     bool use_low_level) {
  ModelShape shape;
  shape.video_dim = data.videos.total_dim();
  const auto& music_dims = data.music.block_dims();
  if (music_dims.size() == 2) {
    shape.music_low_dim = music_dims[0];
    shape.music_high_dim = music_dims[1];
  } else {
    if (use_low_level) throw DimensionError("shape_for: music store has no low-level block");
    shape.music_high_dim = music_dims.at(0);
  }
  shape.use_low_level = use_low_level;
  shape.hidden = std::move(hidden);
  shape.embedding_dim = embedding_dim;
  shape.n_classes = data.n_train_classes();
  return shape;
}

void ModelState::validate() const {
  if (video.layers().empty() || music.layers().empty()) throw DimensionError("ModelState: empty tower");
  detail::require_same_dim(video.output_dim(), prototype.cols(), "ModelState video tower vs prototype");
  detail::require_same_dim(music.output_dim(), prototype.cols(), "ModelState music tower vs prototype");
}

ModelState init_model(const ModelShape& shape, Rng& rng) {
  shape.validate();
  ModelState model;
  model.video = init_encoder(shape.video_spec(), rng);
  model.music = init_encoder(shape.music_spec(), rng);
  model.prototype = Matrix(shape.n_classes, shape.embedding_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.embedding_dim));
  for (double& v : model.prototype.span()) v = rng.uniform(-bound, bound);
  return model;
}

std::vector<std::span<const double>> music_inputs(const EncoderParams& music_tower, const FeatureStore& store,
                                                  std::size_t row) {
  if (music_tower.input_arity() == 2) {
    if (store.block_count() != 2) {
      throw DimensionError("music tower expects low- and high-level blocks; store has one block");
    }
    return {store.block(row, 0), store.block(row, 1)};
  }
  return {store.block(row, store.block_count() - 1)};
}

ForwardResult forward_music(const EncoderParams& music_tower, const FeatureStore& store, std::size_t row) {
  const auto inputs = music_inputs(music_tower, store, row);
  if (inputs.size() == 2) return forward(music_tower, inputs[0], inputs[1]);
  return forward(music_tower, inputs[0]);
}

Vector encode_music(const EncoderParams& music_tower, const FeatureStore& store, std::size_t row) {
  return forward_music(music_tower, store, row).embedding;
}

ModelGradients ModelGradients::zeros_like(const ModelState& model) {
  return {EncoderGradients::zeros_like(model.video), EncoderGradients::zeros_like(model.music),
          Matrix(model.prototype.rows(), model.prototype.cols())};
}

namespace {

template <typename Span, typename Layers>
void push_layers(std::vector<Span>& out, Layers& layers) {
  for (auto& layer : layers) {
    out.push_back(layer.weight.span());
    out.push_back(layer.bias.span());
  }
}

}  // namespace

std::vector<std::span<double>> parameter_tensors(ModelState& model) {
  std::vector<std::span<double>> out;
  push_layers(out, model.video.mutable_layers());
  push_layers(out, model.music.mutable_layers());
  out.push_back(model.prototype.span());
  return out;
}

std::vector<std::span<const double>> parameter_tensors(const ModelState& model) {
  std::vector<std::span<const double>> out;
  push_layers(out, model.video.layers());
  push_layers(out, model.music.layers());
  out.push_back(model.prototype.span());
  return out;
}

std::vector<std::span<const double>> gradient_tensors(const ModelGradients& grads) {
  std::vector<std::span<const double>> out;
  for (const auto* g : {&grads.video, &grads.music}) {
    for (std::size_t l = 0; l < g->d_weight.size(); ++l) {
      out.push_back(g->d_weight[l].span());
      out.push_back(g->d_bias[l].span());
    }
  }
  out.push_back(grads.prototype.span());
  return out;
}

}  // namespace xmcm
