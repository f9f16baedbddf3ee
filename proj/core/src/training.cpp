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

#include "xmcm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmcm/retrieval.hpp"

namespace xmcm {

void TrainConfig::validate() const {
  loss.validate();
  auto fail = [](const std::string& msg) { throw std::invalid_argument("TrainConfig: " + msg); };
  if (!(std::isfinite(learning_rate) && learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(std::isfinite(weight_decay) && weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in (0, 1)");
  if (!(std::isfinite(adam_eps) && adam_eps > 0.0)) fail("adam_eps must be positive");
}

TrainConfig desk_profile() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 32;
  cfg.epochs = 100;
  return cfg;
}

AdamState AdamState::zeros_like(const ModelState& model) {
  AdamState state;
  for (const auto& t : parameter_tensors(model)) {
    state.first_moment.emplace_back(t.size(), 0.0);
    state.second_moment.emplace_back(t.size(), 0.0);
  }
  return state;
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg) {
  detail::require_same_dim(params.size(), grads.size(), "adam_step tensor count");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  detail::require_same_dim(state.first_moment.size(), params.size(), "adam_step moment count");
  detail::require_same_dim(state.second_moment.size(), params.size(), "adam_step moment count");
  for (std::size_t t = 0; t < params.size(); ++t) {
    detail::require_same_dim(params[t].size(), grads[t].size(), "adam_step gradient shape");
    detail::require_same_dim(params[t].size(), state.first_moment[t].size(), "adam_step moment shape");
    detail::require_same_dim(params[t].size(), state.second_moment[t].size(), "adam_step moment shape");
    if (!std::all_of(grads[t].begin(), grads[t].end(), [](double g) { return std::isfinite(g); })) {
      throw NonFiniteError("adam_step: non-finite gradient");
    }
  }

  state.step += 1;
  const double step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, step);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, step);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grads[t][i] + cfg.weight_decay * params[t][i];
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[t][i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

void adam_step(ModelState& model, const ModelGradients& grads, AdamState& state, const TrainConfig& cfg) {
  const auto params = parameter_tensors(model);
  const auto g = gradient_tensors(grads);
  adam_step(params, g, state, cfg);
}

std::size_t sample_negative(Rng& rng, std::size_t n_classes, std::size_t y) {
  if (n_classes < 2) throw std::invalid_argument("sample_negative: need at least two classes");
  return static_cast<std::size_t>(rng.choice(n_classes, y));
}

std::vector<TrainPair> make_pairs(const Dataset& data, Split split) {
  std::vector<TrainPair> pairs;
  for (const auto& e : data.manifest.entries()) {
    if (e.split != split) continue;
    const auto row = data.videos.find(e.video_id);
    if (!row) throw DatasetError("video '" + e.video_id + "' missing from the video store");
    pairs.push_back({*row, e.music_class});
  }
  return pairs;
}

std::vector<PairSample> draw_negatives(Rng& rng, std::span<const TrainPair> batch, std::size_t n_classes) {
  std::vector<PairSample> samples;
  samples.reserve(batch.size());
  for (const auto& p : batch) samples.push_back({p, sample_negative(rng, n_classes, p.music_class)});
  return samples;
}

namespace {

void check_sample(const ModelState& model, const FeatureStore& music, const PairSample& s) {
  if (s.pair.music_class >= model.n_classes() || s.negative_class >= model.n_classes()) {
    throw IndexError("batch: class index outside the " + std::to_string(model.n_classes()) + " training classes");
  }
  if (s.negative_class == s.pair.music_class) throw std::invalid_argument("batch: negative equals positive class");
  if (s.negative_class >= music.size() || s.pair.music_class >= music.size()) {
    throw IndexError("batch: class has no music row");
  }
}

bool similarity_active(const LossConfig& cfg) { return cfg.beta != 0.0 && cfg.sim_kind != SimilarityKind::Off; }

}  // namespace

BatchObjective batch_objective(const ModelState& model, const FeatureStore& videos, const FeatureStore& music,
                               std::span<const PairSample> samples, const LossConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("batch_objective: empty batch");
  const double scale = 1.0 / static_cast<double>(samples.size());
  BatchObjective out{0.0, ModelGradients::zeros_like(model)};
  const bool with_negative = similarity_active(cfg);

  for (const auto& s : samples) {
    check_sample(model, music, s);
    const ForwardResult v = forward(model.video, videos.row(s.pair.video_row));
    const ForwardResult pos = forward_music(model.music, music, s.pair.music_class);
    std::optional<ForwardResult> neg;
    if (with_negative) neg = forward_music(model.music, music, s.negative_class);
    // Without the similarity term the negative never reaches the loss; any
    // nonzero placeholder of the right size keeps total_loss' shape checks.
    const std::span<const double> neg_emb = neg ? neg->embedding.span() : pos.embedding.span();

    const TotalLoss loss = total_loss(v.embedding.span(), pos.embedding.span(), neg_emb, s.pair.music_class,
                                      model.prototype, cfg);
    out.value += scale * loss.value;
    out.grads.video.add_scaled(backward(model.video, v.tape, loss.d_video.span()), scale);
    out.grads.music.add_scaled(backward(model.music, pos.tape, loss.d_pos.span()), scale);
    if (neg) out.grads.music.add_scaled(backward(model.music, neg->tape, loss.d_neg.span()), scale);
    auto dst = out.grads.prototype.span();
    const auto src = loss.d_prototype.span();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
  return out;
}

double batch_loss(const ModelState& model, const FeatureStore& videos, const FeatureStore& music,
                  std::span<const PairSample> samples, const LossConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double value = 0.0;
  for (const auto& s : samples) {
    check_sample(model, music, s);
    const Vector v = encode(model.video, videos.row(s.pair.video_row));
    const Vector pos = encode_music(model.music, music, s.pair.music_class);
    const Vector neg = similarity_active(cfg) ? encode_music(model.music, music, s.negative_class) : pos;
    value += total_loss(v.span(), pos.span(), neg.span(), s.pair.music_class, model.prototype, cfg).value;
  }
  return value / static_cast<double>(samples.size());
}

StepResult train_step(ModelState& model, AdamState& adam, const Dataset& data, std::span<const TrainPair> batch,
                      const TrainConfig& cfg, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  StepResult result;
  result.samples = draw_negatives(rng, batch, model.n_classes());
  BatchObjective objective = batch_objective(model, data.videos, data.music, result.samples, cfg.loss);
  result.loss = objective.value;
  adam_step(model, objective.grads, adam, cfg);
  return result;
}

TrainResult train(ModelState model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  AdamState adam = AdamState::zeros_like(model);
  return train(std::move(model), std::move(adam), data, cfg, on_epoch);
}

TrainResult train(ModelState model, AdamState adam, const Dataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  const auto pairs = make_pairs(data, Split::Train);
  if (pairs.empty()) throw DatasetError("train: empty train split");
  if (data.n_train_classes() < 2) throw DatasetError("train: need at least two training classes");
  detail::require_same_dim(model.n_classes(), data.n_train_classes(), "train: prototype rows vs training classes");

  TrainResult result{std::move(model), std::move(adam), {}};
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed ^ kTrainStream);
  const bool has_validation = data.manifest.count(Split::Validation) > 0;
  const std::size_t ks[] = {10};
  std::vector<std::size_t> order(pairs.size());
  std::vector<TrainPair> batch;
  double best_recall = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min<std::size_t>(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      const StepResult step = train_step(result.model, result.adam, data, batch, cfg, rng);
      loss_sum += step.loss * static_cast<double>(batch.size());
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(pairs.size()), std::nullopt};
    if (has_validation) {
      const RecallTable table = evaluate(result.model, data, Split::Validation, EvalMode::Seen, ks);
      record.val_recall_at_10 = table.rows.front().second;
      if (*record.val_recall_at_10 > best_recall) {
        best_recall = *record.val_recall_at_10;
        result.history.best_epoch = epoch;
      }
    }
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace xmcm
