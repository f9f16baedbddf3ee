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

#include "xmcm/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace xmcm {

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SynthSpec: " + msg); };
  if (n_seen_classes + n_unseen_classes < 2) fail("need at least two classes in total");
  if (n_seen_classes > 0 && vpm_train == 0) fail("vpm_train must be positive when there are seen classes");
  if (latent_dim == 0 || video_dim == 0 || music_low_dim == 0 || music_high_dim == 0) {
    fail("all dimensions must be positive");
  }
  if (!(std::isfinite(noise_sigma) && noise_sigma >= 0.0)) fail("noise_sigma must be non-negative");
  if (!(min_center_angle_deg >= 0.0 && min_center_angle_deg <= 180.0)) {
    fail("min_center_angle_deg must lie in [0, 180]");
  }
}

SynthSpec easy_profile(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  return spec;
}

namespace {

std::string make_id(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

Matrix gaussian_map(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : m.span()) v = scale * rng.gaussian();
  return m;
}

Matrix draw_centers(Rng& rng, std::size_t n, std::size_t dim, double min_angle_deg) {
  const double max_cos = std::cos(min_angle_deg * std::numbers::pi / 180.0);
  Matrix centers(n, dim);
  std::vector<double> candidate(dim);
  for (std::size_t k = 0; k < n; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kCenterRetryBudget && !placed; ++attempt) {
      for (double& v : candidate) v = rng.gaussian();
      const double norm = l2_norm(candidate);
      if (!(norm > 0.0)) continue;
      for (double& v : candidate) v /= norm;
      placed = true;
      for (std::size_t j = 0; j < k && placed; ++j) {
        if (dot(centers.row(j), candidate) > max_cos) placed = false;
      }
    }
    if (!placed) {
      throw UnsatisfiableSpecError("generate_synthetic: could not place center " + std::to_string(k) + " of " +
                                   std::to_string(n) + " at >= " + std::to_string(min_angle_deg) + " degrees in " +
                                   std::to_string(dim) + " dimensions within " +
                                   std::to_string(kCenterRetryBudget) + " attempts");
    }
    std::copy(candidate.begin(), candidate.end(), centers.row(k).begin());
  }
  return centers;
}

void add_noise(Rng& rng, std::span<double> v, double sigma) {
  if (sigma == 0.0) return;
  for (double& x : v) x += sigma * rng.gaussian();
}

}  // namespace

SynthDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n_classes = spec.n_seen_classes + spec.n_unseen_classes;

  SynthDataset out;
  out.centers = draw_centers(rng, n_classes, spec.latent_dim, spec.min_center_angle_deg);
  out.video_map = gaussian_map(rng, spec.video_dim, spec.latent_dim);
  out.music_low_map = gaussian_map(rng, spec.music_low_dim, spec.latent_dim);
  out.music_high_map = gaussian_map(rng, spec.music_high_dim, spec.latent_dim);

  out.data.music = FeatureStore({spec.music_low_dim, spec.music_high_dim});
  for (std::size_t k = 0; k < n_classes; ++k) {
    Vector low = matvec(out.music_low_map, out.centers.row(k));
    Vector high = matvec(out.music_high_map, out.centers.row(k));
    add_noise(rng, low.span(), spec.noise_sigma);
    add_noise(rng, high.span(), spec.noise_sigma);
    std::vector<double> fused(low.values());
    fused.insert(fused.end(), high.values().begin(), high.values().end());
    out.data.music.add(make_id('m', k, 4), fused);
  }

  out.data.videos = FeatureStore({spec.video_dim});
  std::vector<ManifestEntry> entries;
  std::size_t next_video = 0;
  auto emit = [&](std::size_t k, Split split, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Vector v = matvec(out.video_map, out.centers.row(k));
      add_noise(rng, v.span(), spec.noise_sigma);
      std::string id = make_id('v', next_video++, 6);
      out.data.videos.add(id, v.span());
      entries.push_back({std::move(id), k, split});
    }
  };
  for (std::size_t k = 0; k < spec.n_seen_classes; ++k) {
    emit(k, Split::Train, spec.vpm_train);
    emit(k, Split::Validation, spec.vpm_val);
    emit(k, Split::SeenTest, spec.vpm_seen_test);
  }
  for (std::size_t k = spec.n_seen_classes; k < n_classes; ++k) emit(k, Split::UnseenTest, spec.vpm_unseen);
  out.data.manifest = DatasetManifest(std::move(entries));
  return out;
}

double nearest_center_recall_at_1(const SynthDataset& synth, Split split) {
  const std::size_t n_train = synth.data.manifest.n_train_classes();
  const std::size_t n_classes = synth.centers.rows();
  const bool unseen = split == Split::UnseenTest;
  const std::size_t first = unseen ? n_train : 0;
  const std::size_t last = unseen ? n_classes : n_train;

  std::vector<Vector> images;
  for (std::size_t k = first; k < last; ++k) images.push_back(matvec(synth.video_map, synth.centers.row(k)));

  const auto queries = synth.data.manifest.entries_in(split);
  if (queries.empty()) throw std::invalid_argument("nearest_center_recall_at_1: empty split");
  std::size_t hits = 0;
  for (const auto& q : queries) {
    const auto x = synth.data.videos.row(*synth.data.videos.find(q.video_id));
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < images.size(); ++c) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - images[c][i];
        d2 += diff * diff;
      }
      if (d2 < best_dist) {
        best_dist = d2;
        best = c;
      }
    }
    if (first + best == q.music_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

}  // namespace xmcm
