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

#include "xmcm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace xmcm {

std::string_view to_string(LiftKind k) {
  switch (k) {
    case LiftKind::Softmax: return "softmax";
    case LiftKind::CosFace: return "cosface";
    case LiftKind::ArcFace: return "arcface";
  }
  return "unknown";
}

std::string_view to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::PaperEq5: return "hinge";
    case SimilarityKind::DraftPiecewise: return "piecewise";
    case SimilarityKind::Off: return "off";
  }
  return "unknown";
}

LiftKind parse_lift_kind(std::string_view s) {
  if (s == "softmax") return LiftKind::Softmax;
  if (s == "cosface") return LiftKind::CosFace;
  if (s == "arcface") return LiftKind::ArcFace;
  throw std::invalid_argument("unknown lift kind '" + std::string(s) + "' (softmax|cosface|arcface)");
}

SimilarityKind parse_similarity_kind(std::string_view s) {
  if (s == "hinge") return SimilarityKind::PaperEq5;
  if (s == "piecewise") return SimilarityKind::DraftPiecewise;
  if (s == "off") return SimilarityKind::Off;
  throw std::invalid_argument("unknown similarity kind '" + std::string(s) + "' (hinge|piecewise|off)");
}

void LossConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("LossConfig: " + msg); };
  if (!(std::isfinite(s) && s > 0.0)) fail("s must be positive");
  if (!(std::isfinite(mu_lift) && mu_lift >= 0.0)) fail("mu_lift must be non-negative");
  if (lift_kind == LiftKind::CosFace && !(mu_lift < 1.0)) fail("mu_lift must be below 1 for cosface");
  if (lift_kind == LiftKind::ArcFace && !(mu_lift < std::numbers::pi / 2)) {
    fail("mu_lift must be below pi/2 for arcface");
  }
  if (!(tau >= -1.0 && tau <= 1.0)) fail("tau must lie in [-1, 1]");
  if (!(std::isfinite(alpha) && alpha >= 0.0)) fail("alpha must be non-negative");
  if (!(std::isfinite(beta) && beta >= 0.0)) fail("beta must be non-negative");
}

namespace {

void check_class_args(std::span<const double> x, std::size_t y, const Matrix& prototype, const char* what) {
  if (y >= prototype.rows()) {
    throw IndexError(std::string(what) + ": class index " + std::to_string(y) + " out of range for " +
                     std::to_string(prototype.rows()) + " classes");
  }
  detail::require_same_dim(x.size(), prototype.cols(), what);
}

// Cross-entropy over logits with target y. Returns the value and writes
// softmax(logits) - onehot(y) into `dlogits`. When the target logit is the
// largest, both the value and the target gradient are formed from the other
// classes' mass so a confident prediction does not cancel to zero.
double cross_entropy(std::span<const double> logits, std::size_t y, std::vector<double>& dlogits) {
  const double lse = log_sum_exp(logits);
  const double target = logits[y];
  dlogits.resize(logits.size());
  double rest_prob = 0.0;  // sum of p_j over j != y
  double rest_ratio = 0.0;  // sum of exp(l_j - l_y) over j != y
  bool target_is_max = true;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j == y) continue;
    dlogits[j] = std::exp(logits[j] - lse);
    rest_prob += dlogits[j];
    if (logits[j] > target) target_is_max = false;
    rest_ratio += std::exp(logits[j] - target);
  }
  dlogits[y] = -rest_prob;
  if (target_is_max) return std::log1p(rest_ratio);
  return lse - target;
}

// Gradient of cos(a, b) with respect to a, accumulated with weight g.
// cos = a.b / (|a||b|);  d/da = b / (|a||b|) - cos * a / |a|^2
void add_cosine_grad(std::span<double> out, std::span<const double> a, std::span<const double> b, double na,
                     double nb, double cos_ab, double g) {
  const double inv = 1.0 / (na * nb);
  const double self = cos_ab / (na * na);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += g * (b[i] * inv - a[i] * self);
}

double require_norm(std::span<const double> v, const char* what) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) throw DegenerateInputError(std::string(what) + ": zero-norm input");
  return n;
}

struct Angular {
  LiftKind kind;
  double s;
  double mu;
};

ClassLoss angular_loss(std::span<const double> x, std::size_t y, const Matrix& w, Angular cfg, const char* what) {
  check_class_args(x, y, w, what);
  const std::size_t n = w.rows();
  const double nx = require_norm(x, what);

  std::vector<double> norms(n), cosines(n), logits(n);
  for (std::size_t j = 0; j < n; ++j) {
    norms[j] = require_norm(w.row(j), what);
    cosines[j] = std::clamp(dot(w.row(j), x) / (nx * norms[j]), -1.0, 1.0);
    logits[j] = cfg.s * cosines[j];
  }

  // d(target logit) / d(cos_y)
  double target_slope = cfg.s;
  if (cfg.kind == LiftKind::CosFace) {
    logits[y] = cfg.s * (cosines[y] - cfg.mu);
  } else {
    constexpr double kEdge = 1e-12;
    const double c = std::clamp(cosines[y], -1.0 + kEdge, 1.0 - kEdge);
    const double sin_t = std::sqrt(1.0 - c * c);
    logits[y] = cfg.s * (c * std::cos(cfg.mu) - sin_t * std::sin(cfg.mu));
    target_slope = cfg.s * (std::cos(cfg.mu) + c * std::sin(cfg.mu) / sin_t);
  }

  std::vector<double> dlogits;
  ClassLoss out;
  out.value = cross_entropy(logits, y, dlogits);
  out.d_feature = Vector(x.size());
  out.d_prototype = Matrix(n, w.cols());
  for (std::size_t j = 0; j < n; ++j) {
    const double dcos = dlogits[j] * (j == y ? target_slope : cfg.s);
    if (dcos == 0.0) continue;
    add_cosine_grad(out.d_feature.span(), x, w.row(j), nx, norms[j], cosines[j], dcos);
    add_cosine_grad(out.d_prototype.row(j), w.row(j), x, norms[j], nx, cosines[j], dcos);
  }
  return out;
}

}  // namespace

ClassLoss softmax_loss(std::span<const double> x, std::size_t y, const Matrix& prototype) {
  check_class_args(x, y, prototype, "softmax_loss");
  const std::size_t n = prototype.rows();
  std::vector<double> logits(n);
  for (std::size_t j = 0; j < n; ++j) logits[j] = dot(prototype.row(j), x);

  std::vector<double> dlogits;
  ClassLoss out;
  out.value = cross_entropy(logits, y, dlogits);
  out.d_feature = Vector(x.size());
  out.d_prototype = Matrix(n, prototype.cols());
  for (std::size_t j = 0; j < n; ++j) {
    const auto wj = prototype.row(j);
    auto dwj = out.d_prototype.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.d_feature[i] += dlogits[j] * wj[i];
      dwj[i] = dlogits[j] * x[i];
    }
  }
  return out;
}

ClassLoss cosface_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, double s, double mu) {
  return angular_loss(x, y, prototype, {LiftKind::CosFace, s, mu}, "cosface_loss");
}

ClassLoss arcface_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, double s, double mu) {
  return angular_loss(x, y, prototype, {LiftKind::ArcFace, s, mu}, "arcface_loss");
}

ClassLoss class_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, const LossConfig& cfg) {
  switch (cfg.lift_kind) {
    case LiftKind::Softmax: return softmax_loss(x, y, prototype);
    case LiftKind::CosFace: return cosface_loss(x, y, prototype, cfg.s, cfg.mu_lift);
    case LiftKind::ArcFace: return arcface_loss(x, y, prototype, cfg.s, cfg.mu_lift);
  }
  throw std::invalid_argument("class_loss: unknown lift kind");
}

LiftingLoss lifting_loss(std::span<const double> v_emb, std::span<const double> m_emb, std::size_t y,
                         const Matrix& prototype, const LossConfig& cfg) {
  detail::require_same_dim(v_emb.size(), m_emb.size(), "lifting_loss");
  ClassLoss video = class_loss(v_emb, y, prototype, cfg);
  ClassLoss music = class_loss(m_emb, y, prototype, cfg);

  LiftingLoss out;
  out.value = video.value + cfg.alpha * music.value;
  out.d_video = std::move(video.d_feature);
  out.d_music = std::move(music.d_feature);
  for (double& g : out.d_music.span()) g *= cfg.alpha;
  out.d_prototype = std::move(video.d_prototype);
  auto dst = out.d_prototype.span();
  const auto src = music.d_prototype.span();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += cfg.alpha * src[i];
  return out;
}

SimilarityLoss similarity_loss(std::span<const double> v_emb, std::span<const double> m_pos,
                               std::span<const double> m_neg, double tau, SimilarityKind kind) {
  detail::require_same_dim(v_emb.size(), m_pos.size(), "similarity_loss positive");
  detail::require_same_dim(v_emb.size(), m_neg.size(), "similarity_loss negative");

  SimilarityLoss out;
  out.d_video = Vector(v_emb.size());
  out.d_pos = Vector(v_emb.size());
  out.d_neg = Vector(v_emb.size());
  if (kind == SimilarityKind::Off) return out;

  const double nv = require_norm(v_emb, "similarity_loss");
  const double np = require_norm(m_pos, "similarity_loss");
  const double nn = require_norm(m_neg, "similarity_loss");
  const double cos_pos = std::clamp(dot(v_emb, m_pos) / (nv * np), -1.0, 1.0);
  const double cos_neg = std::clamp(dot(v_emb, m_neg) / (nv * nn), -1.0, 1.0);

  // Weight on cos_pos is -1 in both variants; only the additive constant and
  // the negative hinge differ.
  const bool hinge_active = cos_neg > tau;
  if (kind == SimilarityKind::PaperEq5) {
    out.value = (hinge_active ? cos_neg : tau) - cos_pos;
  } else {
    out.value = (1.0 - cos_pos) + (hinge_active ? cos_neg - tau : 0.0);
  }

  add_cosine_grad(out.d_video.span(), v_emb, m_pos, nv, np, cos_pos, -1.0);
  add_cosine_grad(out.d_pos.span(), m_pos, v_emb, np, nv, cos_pos, -1.0);
  if (hinge_active) {
    add_cosine_grad(out.d_video.span(), v_emb, m_neg, nv, nn, cos_neg, 1.0);
    add_cosine_grad(out.d_neg.span(), m_neg, v_emb, nn, nv, cos_neg, 1.0);
  }
  return out;
}

TotalLoss total_loss(std::span<const double> v_emb, std::span<const double> m_pos, std::span<const double> m_neg,
                     std::size_t y, const Matrix& prototype, const LossConfig& cfg) {
  detail::require_same_dim(v_emb.size(), m_neg.size(), "total_loss negative");
  LiftingLoss lift = lifting_loss(v_emb, m_pos, y, prototype, cfg);

  TotalLoss out;
  out.value = lift.value;
  out.d_video = std::move(lift.d_video);
  out.d_pos = std::move(lift.d_music);
  out.d_neg = Vector(m_neg.size());
  out.d_prototype = std::move(lift.d_prototype);
  if (cfg.beta == 0.0 || cfg.sim_kind == SimilarityKind::Off) return out;

  const SimilarityLoss sim = similarity_loss(v_emb, m_pos, m_neg, cfg.tau, cfg.sim_kind);
  out.value += cfg.beta * sim.value;
  for (std::size_t i = 0; i < v_emb.size(); ++i) {
    out.d_video[i] += cfg.beta * sim.d_video[i];
    out.d_pos[i] += cfg.beta * sim.d_pos[i];
    out.d_neg[i] = cfg.beta * sim.d_neg[i];
  }
  return out;
}

}  // namespace xmcm
