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

// Fully-connected encoder towers.
//
// A tower maps one input block (video) or two concatenated input blocks
// (music: low-level then high-level) through a stack of affine layers, each
// with its own activation. init_encoder builds ReLU hidden layers and a linear
// output layer; the output lives in the shared embedding space of dimension
// `output_dim()`.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "xmcm/numerics.hpp"

namespace xmcm {

enum class Activation : std::uint32_t { Identity = 0, ReLU = 1 };

struct LayerParams {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct EncoderSpec {
  std::vector<std::size_t> input_dims;   // one block, or {low, high}
  std::vector<std::size_t> layer_sizes;  // hidden sizes followed by the output size
};

class EncoderParams {
 public:
  EncoderParams() = default;
  /// Validates the layer chain: widths line up and the first layer consumes
  /// the concatenated inputs.
  EncoderParams(std::vector<std::size_t> input_dims, std::vector<LayerParams> layers);

  const std::vector<std::size_t>& input_dims() const { return input_dims_; }
  std::size_t input_arity() const { return input_dims_.size(); }
  std::size_t total_input_dim() const;
  std::size_t output_dim() const { return layers_.back().out_dim(); }

  const std::vector<LayerParams>& layers() const { return layers_; }
  /// Mutable access for optimizers. Bumps the revision, so tapes recorded
  /// before the call are rejected by backward().
  std::vector<LayerParams>& mutable_layers();

  std::uint64_t revision() const { return revision_; }

  /// Parameter equality; the revision counter is bookkeeping and ignored.
  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    return a.input_dims_ == b.input_dims_ && a.layers_ == b.layers_;
  }

 private:
  std::vector<std::size_t> input_dims_;
  std::vector<LayerParams> layers_;
  std::uint64_t revision_ = 0;
};

/// Activations cached by forward() for the reverse pass.
struct Tape {
  const EncoderParams* owner = nullptr;
  std::uint64_t revision = 0;
  std::vector<std::size_t> input_dims;
  std::vector<std::vector<double>> layer_inputs;  // input seen by each layer
  std::vector<std::vector<double>> pre_activations;
};

struct ForwardResult {
  Vector embedding;
  Tape tape;
};

struct EncoderGradients {
  std::vector<Matrix> d_weight;
  std::vector<Vector> d_bias;
  std::vector<Vector> d_inputs;  // one per input block

  static EncoderGradients zeros_like(const EncoderParams& enc);
  /// this += scale * other. Shapes must agree.
  void add_scaled(const EncoderGradients& other, double scale);
};

struct StaleTapeError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn layer by layer in
/// row-major order; biases zero.
EncoderParams init_encoder(const EncoderSpec& spec, Rng& rng);

ForwardResult forward(const EncoderParams& enc, std::span<const double> x);
ForwardResult forward(const EncoderParams& enc, std::span<const double> x_low,
                      std::span<const double> x_high);
/// Forward without recording a tape.
Vector encode(const EncoderParams& enc, std::span<const double> x);
Vector encode(const EncoderParams& enc, std::span<const double> x_low,
              std::span<const double> x_high);

/// Reverse pass. ReLU's subgradient at exactly zero is zero.
EncoderGradients backward(const EncoderParams& enc, const Tape& tape,
                          std::span<const double> d_embedding);

}  // namespace xmcm
