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

#include "xmcm/encoder.hpp"

#include <cmath>
#include <numeric>

namespace xmcm {

EncoderParams::EncoderParams(std::vector<std::size_t> input_dims, std::vector<LayerParams> layers)
    : input_dims_(std::move(input_dims)), layers_(std::move(layers)) {
  if (input_dims_.empty() || input_dims_.size() > 2) {
    throw std::invalid_argument("EncoderParams: input arity must be 1 or 2");
  }
  for (std::size_t d : input_dims_) {
    if (d == 0) throw DimensionError("EncoderParams: input dimensions must be positive");
  }
  if (layers_.empty()) throw std::invalid_argument("EncoderParams: at least one layer required");
  std::size_t expected_in = total_input_dim();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    detail::require_same_dim(layer.in_dim(), expected_in, "EncoderParams layer input");
    detail::require_same_dim(layer.bias.dim(), layer.out_dim(), "EncoderParams layer bias");
    expected_in = layer.out_dim();
  }
}

std::size_t EncoderParams::total_input_dim() const {
  return std::accumulate(input_dims_.begin(), input_dims_.end(), std::size_t{0});
}

std::vector<LayerParams>& EncoderParams::mutable_layers() {
  ++revision_;
  return layers_;
}

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& enc) {
  EncoderGradients g;
  for (const auto& layer : enc.layers()) {
    g.d_weight.emplace_back(layer.out_dim(), layer.in_dim());
    g.d_bias.emplace_back(layer.out_dim());
  }
  for (std::size_t d : enc.input_dims()) g.d_inputs.emplace_back(d);
  return g;
}

void EncoderGradients::add_scaled(const EncoderGradients& other, double scale) {
  detail::require_same_dim(d_weight.size(), other.d_weight.size(), "EncoderGradients");
  detail::require_same_dim(d_inputs.size(), other.d_inputs.size(), "EncoderGradients");
  auto axpy = [scale](std::span<double> dst, std::span<const double> src) {
    detail::require_same_dim(dst.size(), src.size(), "EncoderGradients tensor");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  };
  for (std::size_t l = 0; l < d_weight.size(); ++l) {
    axpy(d_weight[l].span(), other.d_weight[l].span());
    axpy(d_bias[l].span(), other.d_bias[l].span());
  }
  for (std::size_t b = 0; b < d_inputs.size(); ++b) axpy(d_inputs[b].span(), other.d_inputs[b].span());
}

EncoderParams init_encoder(const EncoderSpec& spec, Rng& rng) {
  if (spec.layer_sizes.empty()) throw std::invalid_argument("init_encoder: empty layer list");
  if (spec.input_dims.empty()) throw std::invalid_argument("init_encoder: no input blocks");
  for (std::size_t s : spec.layer_sizes) {
    if (s == 0) throw DimensionError("init_encoder: layer sizes must be positive");
  }
  std::size_t fan_in = std::accumulate(spec.input_dims.begin(), spec.input_dims.end(), std::size_t{0});
  if (fan_in == 0) throw DimensionError("init_encoder: input dimensions must be positive");

  std::vector<LayerParams> layers;
  for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i) {
    const std::size_t out = spec.layer_sizes[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(out, fan_in);
    for (double& v : w.span()) v = rng.uniform(-bound, bound);
    const bool last = i + 1 == spec.layer_sizes.size();
    layers.push_back({std::move(w), Vector(out), last ? Activation::Identity : Activation::ReLU});
    fan_in = out;
  }
  return EncoderParams(spec.input_dims, std::move(layers));
}

namespace {

ForwardResult run_forward(const EncoderParams& enc, std::vector<double> input) {
  ForwardResult result;
  Tape& tape = result.tape;
  tape.owner = &enc;
  tape.revision = enc.revision();
  tape.input_dims = enc.input_dims();

  std::vector<double> current = std::move(input);
  for (const auto& layer : enc.layers()) {
    std::vector<double> pre(layer.out_dim());
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      const auto row = layer.weight.row(r);
      double sum = layer.bias[r];
      for (std::size_t c = 0; c < row.size(); ++c) sum += row[c] * current[c];
      pre[r] = sum;
    }
    std::vector<double> post = pre;
    if (layer.activation == Activation::ReLU) {
      for (double& v : post) v = v > 0.0 ? v : 0.0;
    }
    tape.layer_inputs.push_back(std::move(current));
    tape.pre_activations.push_back(std::move(pre));
    current = std::move(post);
  }
  result.embedding = Vector(std::move(current));
  return result;
}

}  // namespace

ForwardResult forward(const EncoderParams& enc, std::span<const double> x) {
  if (enc.input_arity() != 1) {
    throw DimensionError("forward: encoder expects " + std::to_string(enc.input_arity()) + " input blocks, got 1");
  }
  detail::require_same_dim(x.size(), enc.input_dims()[0], "forward input");
  return run_forward(enc, std::vector<double>(x.begin(), x.end()));
}

ForwardResult forward(const EncoderParams& enc, std::span<const double> x_low,
                      std::span<const double> x_high) {
  if (enc.input_arity() != 2) {
    throw DimensionError("forward: encoder expects " + std::to_string(enc.input_arity()) + " input blocks, got 2");
  }
  detail::require_same_dim(x_low.size(), enc.input_dims()[0], "forward low-level input");
  detail::require_same_dim(x_high.size(), enc.input_dims()[1], "forward high-level input");
  std::vector<double> fused(x_low.begin(), x_low.end());
  fused.insert(fused.end(), x_high.begin(), x_high.end());
  return run_forward(enc, std::move(fused));
}

Vector encode(const EncoderParams& enc, std::span<const double> x) { return forward(enc, x).embedding; }

Vector encode(const EncoderParams& enc, std::span<const double> x_low, std::span<const double> x_high) {
  return forward(enc, x_low, x_high).embedding;
}

EncoderGradients backward(const EncoderParams& enc, const Tape& tape, std::span<const double> d_embedding) {
  if (tape.owner != &enc || tape.revision != enc.revision() || tape.input_dims != enc.input_dims() ||
      tape.layer_inputs.size() != enc.layers().size()) {
    throw StaleTapeError("backward: tape was not recorded against these parameters");
  }
  detail::require_same_dim(d_embedding.size(), enc.output_dim(), "backward cotangent");

  EncoderGradients grads = EncoderGradients::zeros_like(enc);
  std::vector<double> upstream(d_embedding.begin(), d_embedding.end());
  for (std::size_t li = enc.layers().size(); li-- > 0;) {
    const auto& layer = enc.layers()[li];
    const auto& pre = tape.pre_activations[li];
    const auto& in = tape.layer_inputs[li];
    if (layer.activation == Activation::ReLU) {
      for (std::size_t r = 0; r < upstream.size(); ++r) {
        if (!(pre[r] > 0.0)) upstream[r] = 0.0;
      }
    }
    Matrix& dw = grads.d_weight[li];
    Vector& db = grads.d_bias[li];
    std::vector<double> downstream(layer.in_dim(), 0.0);
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      const double g = upstream[r];
      db[r] = g;
      if (g == 0.0) continue;
      const auto w_row = layer.weight.row(r);
      auto dw_row = dw.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) {
        dw_row[c] = g * in[c];
        downstream[c] += g * w_row[c];
      }
    }
    upstream = std::move(downstream);
  }

  std::size_t offset = 0;
  for (std::size_t b = 0; b < enc.input_arity(); ++b) {
    auto dst = grads.d_inputs[b].span();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = upstream[offset + i];
    offset += dst.size();
  }
  return grads;
}

}  // namespace xmcm
