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

// Training objectives for the two-tower model.
//
// Every loss returns its value together with exact gradients. The class
// losses score a feature against the shared prototype matrix W (one row per
// training music class); the similarity loss compares a video embedding with
// a positive and a sampled negative music embedding directly.
//
// Angular class losses (target class y, c_j = cos(W_j, x)):
//   CosFace:  target logit s * (c_y - mu)
//   ArcFace:  target logit s * cos(acos(c_y) + mu)
//   others:   s * c_j
// and the loss is logsumexp(logits) - logits[y]; the target is excluded from
// the non-target sum.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "xmcm/numerics.hpp"

namespace xmcm {

enum class LiftKind : std::uint64_t { Softmax = 0, CosFace = 1, ArcFace = 2 };
enum class SimilarityKind : std::uint64_t { PaperEq5 = 0, DraftPiecewise = 1, Off = 2 };

std::string_view to_string(LiftKind k);
std::string_view to_string(SimilarityKind k);
LiftKind parse_lift_kind(std::string_view s);
SimilarityKind parse_similarity_kind(std::string_view s);

struct LossConfig {
  double s = 30.0;       // logit scale; not given in the reference setup
  double mu_lift = 0.2;  // class margin
  double tau = 0.2;      // similarity hinge
  double alpha = 0.38;   // music-branch weight
  double beta = 2.0;     // similarity weight
  LiftKind lift_kind = LiftKind::CosFace;
  SimilarityKind sim_kind = SimilarityKind::PaperEq5;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// Loss of one feature against the prototype matrix.
struct ClassLoss {
  double value = 0.0;
  Vector d_feature;
  Matrix d_prototype;
};

struct LiftingLoss {
  double value = 0.0;
  Vector d_video;
  Vector d_music;
  Matrix d_prototype;
};

struct SimilarityLoss {
  double value = 0.0;
  Vector d_video;
  Vector d_pos;
  Vector d_neg;
};

struct TotalLoss {
  double value = 0.0;
  Vector d_video;
  Vector d_pos;
  Vector d_neg;
  Matrix d_prototype;
};

ClassLoss softmax_loss(std::span<const double> x, std::size_t y, const Matrix& prototype);
ClassLoss cosface_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, double s, double mu);
ClassLoss arcface_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, double s, double mu);
/// Dispatches on cfg.lift_kind.
ClassLoss class_loss(std::span<const double> x, std::size_t y, const Matrix& prototype, const LossConfig& cfg);

/// L(video) + alpha * L(music) against one shared prototype.
LiftingLoss lifting_loss(std::span<const double> v_emb, std::span<const double> m_emb, std::size_t y,
                         const Matrix& prototype, const LossConfig& cfg);

/// PaperEq5:       max(tau, cos(v, neg)) - cos(v, pos)
/// DraftPiecewise: (1 - cos(v, pos)) + max(0, cos(v, neg) - tau)
/// Off:            0
/// At a hinge tie the constant branch is taken, so `neg` gets no gradient.
SimilarityLoss similarity_loss(std::span<const double> v_emb, std::span<const double> m_pos,
                               std::span<const double> m_neg, double tau, SimilarityKind kind);

/// lifting + beta * similarity. The prototype only sees the lifting term.
TotalLoss total_loss(std::span<const double> v_emb, std::span<const double> m_pos, std::span<const double> m_neg,
                     std::size_t y, const Matrix& prototype, const LossConfig& cfg);

}  // namespace xmcm
