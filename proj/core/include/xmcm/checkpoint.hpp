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

// Binary checkpoint, all integers and doubles little-endian:
//
//   magic    "XMCM"
//   version  u32 (= 1)
//   config   f64 s, mu_lift, tau, alpha, beta
//            u64 lift_kind, sim_kind
//            f64 learning_rate, weight_decay
//            u64 batch_size, epochs, seed
//            f64 adam_beta1, adam_beta2, adam_eps
//   encoder  x2 (video, then music):
//            u32 input arity, u64 input dims...
//            u32 layer count, then per layer: u32 activation,
//            weight tensor, bias tensor
//   prototype tensor
//   u32 moment tensor count, then first moments, then second moments
//   u64 Adam step counter
//
// A tensor is u32 rank, u64 dims..., then f64 values row-major.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "xmcm/model.hpp"
#include "xmcm/training.hpp"

namespace xmcm {

inline constexpr char kCheckpointMagic[4] = {'X', 'M', 'C', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelState model;
  AdamState adam;
  TrainConfig config;
};

void save_checkpoint(const ModelState& model, const AdamState& adam, const TrainConfig& cfg, std::ostream& out);
void save_checkpoint(const ModelState& model, const AdamState& adam, const TrainConfig& cfg,
                     const std::filesystem::path& path);

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Also rejects a checkpoint whose towers or prototype differ from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelShape& expected);

/// Shape recovered from a model's parameters.
ModelShape shape_of(const ModelState& model);

}  // namespace xmcm
