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


// Randomised gradient-oracle instances. Each check builds one seeded instance
// (dims <= 8, classes <= 5), resamples while it sits near a kink, and returns
// the worst norm-wise relative error between the analytic gradient and
// central differences over every gradient path of that instance.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <xmcm/encoder.hpp>
#include <xmcm/losses.hpp>
#include <xmcm/model.hpp>
#include <xmcm/training.hpp>

#include "support.hpp"

namespace xmcm::testing {

struct ClassInstance {
  Vector x;
  std::size_t y = 0;
  Matrix w;
  double s = 1.0;
  double mu = 0.0;
};

inline ClassInstance random_class_instance(std::mt19937_64& gen, double max_scale) {
  ClassInstance c;
  const std::size_t dim = random_size(gen, 2, 8);
  const std::size_t n = random_size(gen, 2, 5);
  c.x = random_vector(gen, dim);
  c.w = random_matrix(gen, n, dim);
  c.y = random_size(gen, 0, n - 1);
  c.s = random_values(gen, 1, 1.0, max_scale)[0];
  c.mu = random_values(gen, 1, 0.0, 0.5)[0];
  return c;
}

/// Worst error for softmax_loss, cosface_loss or arcface_loss (s up to 30).
inline double class_loss_gradient_error(LiftKind kind, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  ClassInstance c = random_class_instance(gen, 30.0);
  while (kind == LiftKind::ArcFace && std::abs(naive_cosine(c.x.span(), c.w.row(c.y))) > 0.999) {
    c = random_class_instance(gen, 30.0);
  }
  LossConfig cfg;
  cfg.lift_kind = kind;
  cfg.s = c.s;
  cfg.mu_lift = c.mu;
  const ClassLoss analytic = class_loss(c.x.span(), c.y, c.w, cfg);
  const auto f = [&] { return class_loss(c.x.span(), c.y, c.w, cfg).value; };
  return std::max(relative_error(analytic.d_feature.span(), central_difference(c.x.span(), f)),
                  relative_error(analytic.d_prototype.span(), central_difference(c.w.span(), f)));
}

struct PairInstance {
  ClassInstance c;
  Vector pos, neg;
  LossConfig cfg;
};

// Composite losses add branches of very different size once s is large, and
// central differences cannot resolve the small branch beneath the rounding
// noise of the large one, so pair instances keep s <= 10.
inline PairInstance random_pair_instance(std::mt19937_64& gen, LiftKind lift, SimilarityKind sim) {
  for (;;) {
    PairInstance p;
    p.c = random_class_instance(gen, 10.0);
    p.pos = random_vector(gen, p.c.x.dim());
    p.neg = random_vector(gen, p.c.x.dim());
    p.cfg.lift_kind = lift;
    p.cfg.sim_kind = sim;
    p.cfg.s = p.c.s;
    p.cfg.mu_lift = p.c.mu;
    p.cfg.tau = random_values(gen, 1, -0.3, 0.3)[0];
    p.cfg.alpha = random_values(gen, 1, 0.1, 1.0)[0];
    p.cfg.beta = random_values(gen, 1, 0.5, 3.0)[0];
    const bool hinge_clear = std::abs(naive_cosine(p.c.x.span(), p.neg.span()) - p.cfg.tau) > 1e-3;
    const bool arc_clear = std::abs(naive_cosine(p.c.x.span(), p.c.w.row(p.c.y))) < 0.999 &&
                           std::abs(naive_cosine(p.pos.span(), p.c.w.row(p.c.y))) < 0.999;
    if (hinge_clear && arc_clear) return p;
  }
}

inline double lifting_loss_gradient_error(LiftKind lift, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  PairInstance p = random_pair_instance(gen, lift, SimilarityKind::PaperEq5);
  const LiftingLoss a = lifting_loss(p.c.x.span(), p.pos.span(), p.c.y, p.c.w, p.cfg);
  const auto f = [&] { return lifting_loss(p.c.x.span(), p.pos.span(), p.c.y, p.c.w, p.cfg).value; };
  return std::max({relative_error(a.d_video.span(), central_difference(p.c.x.span(), f)),
                   relative_error(a.d_music.span(), central_difference(p.pos.span(), f)),
                   relative_error(a.d_prototype.span(), central_difference(p.c.w.span(), f))});
}

inline double similarity_loss_gradient_error(SimilarityKind sim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  PairInstance p = random_pair_instance(gen, LiftKind::CosFace, sim);
  const double tau = p.cfg.tau;
  const SimilarityLoss a = similarity_loss(p.c.x.span(), p.pos.span(), p.neg.span(), tau, sim);
  const auto f = [&] { return similarity_loss(p.c.x.span(), p.pos.span(), p.neg.span(), tau, sim).value; };
  return std::max({relative_error(a.d_video.span(), central_difference(p.c.x.span(), f)),
                   relative_error(a.d_pos.span(), central_difference(p.pos.span(), f)),
                   relative_error(a.d_neg.span(), central_difference(p.neg.span(), f))});
}

inline double total_loss_gradient_error(LiftKind lift, SimilarityKind sim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  PairInstance p = random_pair_instance(gen, lift, sim);
  const TotalLoss a = total_loss(p.c.x.span(), p.pos.span(), p.neg.span(), p.c.y, p.c.w, p.cfg);
  const auto f = [&] { return total_loss(p.c.x.span(), p.pos.span(), p.neg.span(), p.c.y, p.c.w, p.cfg).value; };
  return std::max({relative_error(a.d_video.span(), central_difference(p.c.x.span(), f)),
                   relative_error(a.d_pos.span(), central_difference(p.pos.span(), f)),
                   relative_error(a.d_neg.span(), central_difference(p.neg.span(), f)),
                   relative_error(a.d_prototype.span(), central_difference(p.c.w.span(), f))});
}

/// One video, a music store with one row per class, a model and a config.
struct EndToEndInstance {
  FeatureStore videos;
  FeatureStore music;
  ModelState model;
  PairSample sample;
  LossConfig cfg;
};

inline bool relu_clear(const EncoderParams& enc, const Tape& tape) {
  for (std::size_t li = 0; li < enc.layers().size(); ++li) {
    if (enc.layers()[li].activation != Activation::ReLU) continue;
    for (double v : tape.pre_activations[li]) {
      if (std::abs(v) < 1e-4) return false;
    }
  }
  return true;
}

inline EndToEndInstance random_end_to_end_instance(std::mt19937_64& gen, LiftKind lift, SimilarityKind sim) {
  for (;;) {
    EndToEndInstance e;
    ModelShape shape;
    shape.video_dim = random_size(gen, 1, 8);
    shape.music_low_dim = random_size(gen, 1, 4);
    shape.music_high_dim = random_size(gen, 1, 4);
    shape.use_low_level = random_size(gen, 0, 1) == 1;
    shape.hidden = {random_size(gen, 1, 8)};
    shape.embedding_dim = random_size(gen, 2, 8);
    shape.n_classes = random_size(gen, 2, 5);
    Rng rng(gen());
    e.model = init_model(shape, rng);
    // Nonzero biases so every parameter path is exercised.
    for (EncoderParams* tower : {&e.model.video, &e.model.music}) {
      for (auto& layer : tower->mutable_layers()) {
        for (double& b : layer.bias.span()) b = random_values(gen, 1, -0.5, 0.5)[0];
      }
    }

    e.videos = FeatureStore({shape.video_dim});
    e.videos.add("v0", random_values(gen, shape.video_dim));
    e.music = FeatureStore({shape.music_low_dim, shape.music_high_dim});
    for (std::size_t k = 0; k < shape.n_classes; ++k) {
      e.music.add("m" + std::to_string(k), random_values(gen, shape.music_low_dim + shape.music_high_dim));
    }
    const std::size_t y = random_size(gen, 0, shape.n_classes - 1);
    std::size_t neg = random_size(gen, 0, shape.n_classes - 2);
    if (neg >= y) ++neg;
    e.sample = PairSample{TrainPair{0, y}, neg};

    e.cfg.lift_kind = lift;
    e.cfg.sim_kind = sim;
    e.cfg.s = random_values(gen, 1, 1.0, 10.0)[0];
    e.cfg.mu_lift = random_values(gen, 1, 0.0, 0.5)[0];
    e.cfg.tau = random_values(gen, 1, -0.3, 0.3)[0];
    e.cfg.alpha = random_values(gen, 1, 0.1, 1.0)[0];
    e.cfg.beta = random_values(gen, 1, 0.5, 3.0)[0];

    const ForwardResult v = forward(e.model.video, e.videos.row(0));
    const ForwardResult mp = forward_music(e.model.music, e.music, y);
    const ForwardResult mn = forward_music(e.model.music, e.music, neg);
    if (!relu_clear(e.model.video, v.tape) || !relu_clear(e.model.music, mp.tape) ||
        !relu_clear(e.model.music, mn.tape)) {
      continue;
    }
    if (l2_norm(v.embedding.span()) == 0.0 || l2_norm(mp.embedding.span()) == 0.0 ||
        l2_norm(mn.embedding.span()) == 0.0) {
      continue;
    }
    if (std::abs(cosine(v.embedding.span(), mn.embedding.span()) - e.cfg.tau) < 1e-3) continue;
    const auto proto = e.model.prototype.row(y);
    if (std::abs(cosine(v.embedding.span(), proto)) > 0.999 || std::abs(cosine(mp.embedding.span(), proto)) > 0.999) {
      continue;
    }
    return e;
  }
}

/// Worst error over every parameter tensor of both towers and the prototype
/// for the single-pair batch loss.
inline double end_to_end_gradient_error(LiftKind lift, SimilarityKind sim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  EndToEndInstance e = random_end_to_end_instance(gen, lift, sim);
  const PairSample samples[] = {e.sample};
  const BatchObjective analytic = batch_objective(e.model, e.videos, e.music, samples, e.cfg);
  const auto grads = gradient_tensors(analytic.grads);
  const auto params = parameter_tensors(e.model);
  const auto f = [&] { return batch_loss(e.model, e.videos, e.music, samples, e.cfg); };
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    worst = std::max(worst, relative_error(grads[t], central_difference(params[t], f)));
  }
  return worst;
}

}  // namespace xmcm::testing
