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

// Mini-batch training of both towers and the shared prototype.
//
// One step: for every (video, class) pair in the batch, draw one negative
// training class != class, encode video, positive music and negative music,
// evaluate total_loss, average over the batch, backpropagate through both
// towers and take a single Adam step over all parameters.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "xmcm/data.hpp"
#include "xmcm/losses.hpp"
#include "xmcm/model.hpp"

namespace xmcm {

struct TrainConfig {
  LossConfig loss;
  double learning_rate = 1e-5;
  double weight_decay = 0.002;
  std::uint64_t batch_size = 128;
  std::uint64_t epochs = 50;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Small-scale settings used by tests and acceptance runs: lr 1e-3, batch
/// 32, 100 epochs, s = 30. Pair with an embedding size of 16.
TrainConfig desk_profile();
inline constexpr std::size_t kDeskEmbeddingDim = 16;
inline constexpr std::size_t kDeskHiddenDim = 64;

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelState& model);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam with coupled weight decay: g <- g + wd * theta before
/// the moment updates, theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg);
void adam_step(ModelState& model, const ModelGradients& grads, AdamState& state, const TrainConfig& cfg);

/// Uniform over the n_classes - 1 classes other than y.
std::size_t sample_negative(Rng& rng, std::size_t n_classes, std::size_t y);

struct TrainPair {
  std::size_t video_row = 0;  // row in the video store
  std::size_t music_class = 0;
};

struct PairSample {
  TrainPair pair;
  std::size_t negative_class = 0;
};

/// Pairs of `split` in manifest order.
std::vector<TrainPair> make_pairs(const Dataset& data, Split split);

/// One negative per pair, drawn in order from the training classes.
std::vector<PairSample> draw_negatives(Rng& rng, std::span<const TrainPair> batch, std::size_t n_classes);

struct BatchObjective {
  double value = 0.0;
  ModelGradients grads;
};

/// Batch-mean total loss and its exact gradient for fixed negatives.
BatchObjective batch_objective(const ModelState& model, const FeatureStore& videos, const FeatureStore& music,
                               std::span<const PairSample> samples, const LossConfig& cfg);
/// Value only.
double batch_loss(const ModelState& model, const FeatureStore& videos, const FeatureStore& music,
                  std::span<const PairSample> samples, const LossConfig& cfg);

struct StepResult {
  double loss = 0.0;  // evaluated at the parameters before the update
  std::vector<PairSample> samples;
};

StepResult train_step(ModelState& model, AdamState& adam, const Dataset& data, std::span<const TrainPair> batch,
                      const TrainConfig& cfg, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // pair-weighted mean of the epoch's step losses
  std::optional<double> val_recall_at_10;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;  // highest validation Recall@10, first on ties
};

struct TrainResult {
  ModelState model;
  AdamState adam;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs cfg.epochs epochs of ceil(n / batch_size) steps over the train split,
/// shuffling with a permutation drawn each epoch (last partial batch kept),
/// and scores Recall@10 on the validation split (seen catalog) after each
/// epoch. Returns the final-epoch model. Randomness comes from
/// Rng(cfg.seed ^ kTrainStream).
TrainResult train(ModelState model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train(ModelState model, AdamState adam, const Dataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

inline constexpr std::uint64_t kTrainStream = 0x9E3779B97F4A7C15ULL;

}  // namespace xmcm
