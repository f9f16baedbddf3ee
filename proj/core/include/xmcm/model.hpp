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

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "xmcm/data.hpp"
#include "xmcm/encoder.hpp"
#include "xmcm/numerics.hpp"

namespace xmcm {

/// Architecture of the two towers and the shared prototype head.
struct ModelShape {
  std::size_t video_dim = 0;
  std::size_t music_low_dim = 0;
  std::size_t music_high_dim = 0;
  /// false: the music tower sees only the high-level block.
  bool use_low_level = true;
  std::vector<std::size_t> hidden = {64};
  std::size_t embedding_dim = 256;
  std::size_t n_classes = 0;

  EncoderSpec video_spec() const;
  EncoderSpec music_spec() const;
  void validate() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Shape matching a dataset's feature dimensions and training classes.
ModelShape shape_for(const Dataset& data, std::vector<std::size_t> hidden, std::size_t embedding_dim,
                     bool use_low_level = true);

struct ModelState {
  EncoderParams video;
  EncoderParams music;
  Matrix prototype;  // one row per training class

  std::size_t embedding_dim() const { return prototype.cols(); }
  std::size_t n_classes() const { return prototype.rows(); }
  bool music_uses_low_level() const { return music.input_arity() == 2; }
  /// Throws DimensionError when towers and prototype disagree.
  void validate() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Video tower, then music tower, then prototype rows, all with the fan-in
/// scaled uniform scheme of init_encoder.
ModelState init_model(const ModelShape& shape, Rng& rng);

/// Inputs the music tower consumes for row `row` of a music store: both
/// blocks for a dual-input tower, the last block otherwise.
std::vector<std::span<const double>> music_inputs(const EncoderParams& music_tower, const FeatureStore& store,
                                                  std::size_t row);

ForwardResult forward_music(const EncoderParams& music_tower, const FeatureStore& store, std::size_t row);
Vector encode_music(const EncoderParams& music_tower, const FeatureStore& store, std::size_t row);

struct ModelGradients {
  EncoderGradients video;
  EncoderGradients music;
  Matrix prototype;

  static ModelGradients zeros_like(const ModelState& model);
};

/// Parameter tensors in the fixed order: video layers (weight, bias), music
/// layers (weight, bias), prototype. Taking mutable views invalidates tapes.
std::vector<std::span<double>> parameter_tensors(ModelState& model);
std::vector<std::span<const double>> parameter_tensors(const ModelState& model);
std::vector<std::span<const double>> gradient_tensors(const ModelGradients& grads);

}  // namespace xmcm
