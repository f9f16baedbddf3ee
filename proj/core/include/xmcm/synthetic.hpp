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

// Deterministic synthetic video/music data with many-to-one pairing.
//
// Each class owns a unit-norm latent center. The class's single music item is
// (L c + noise, H c + noise) and each of its videos is V c + noise, where L, H
// and V are fixed Gaussian maps (entries N(0, 1/latent_dim)) and noise is
// N(0, sigma^2) per coordinate. Centers are drawn by rejection sampling so
// every pair is at least `min_center_angle_deg` apart.
//
// Draw order from Rng(seed): centers, then V, L, H (row-major), then per class
// the music noise (low block, high block), then videos class by class in the
// split order train, val, seen_test (seen classes) or unseen_test.

#pragma once

#include <cstdint>

#include "xmcm/data.hpp"
#include "xmcm/numerics.hpp"

namespace xmcm {

struct SynthSpec {
  std::size_t n_seen_classes = 30;
  std::size_t n_unseen_classes = 10;
  std::size_t vpm_train = 40;
  std::size_t vpm_val = 4;
  std::size_t vpm_seen_test = 8;
  std::size_t vpm_unseen = 14;
  std::size_t latent_dim = 8;
  std::size_t video_dim = 32;
  std::size_t music_low_dim = 8;
  std::size_t music_high_dim = 24;
  double noise_sigma = 0.05;
  double min_center_angle_deg = 60.0;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Per-class rejection budget when placing latent centers.
inline constexpr std::size_t kCenterRetryBudget = 10000;

/// The easy desk-scale profile: 30 seen + 10 unseen classes, latent 8,
/// sigma 0.05, 60 degree center separation.
SynthSpec easy_profile(std::uint64_t seed = 0);

struct SynthDataset {
  Dataset data;
  Matrix centers;    // n_classes x latent_dim, unit rows
  Matrix video_map;  // video_dim x latent_dim
  Matrix music_low_map;
  Matrix music_high_map;
};

struct UnsatisfiableSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SynthDataset generate_synthetic(const SynthSpec& spec);

/// Recall@1 of the nearest-latent-center classifier on `split`: each video is
/// assigned to the class whose noise-free video image V c_k is closest in
/// Euclidean distance, among the seen classes (train/val/seen_test) or the
/// unseen classes (unseen_test).
double nearest_center_recall_at_1(const SynthDataset& synth, Split split);

}  // namespace xmcm
