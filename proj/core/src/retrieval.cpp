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

#include "xmcm/retrieval.hpp"

#include <algorithm>
#include <cstdio>

namespace xmcm {

std::string_view to_string(EvalMode m) { return m == EvalMode::Seen ? "seen" : "unseen"; }

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "seen") return EvalMode::Seen;
  if (s == "unseen") return EvalMode::Unseen;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (seen|unseen)");
}

void MusicCatalog::add(MusicId id, Vector embedding, std::string name) {
  if (contains(id)) throw std::invalid_argument("MusicCatalog: duplicate music id " + std::to_string(id));
  if (!entries_.empty()) detail::require_same_dim(embedding.dim(), dim(), "MusicCatalog entry");
  if (!(l2_norm(embedding.span()) > 0.0)) {
    throw DegenerateInputError("MusicCatalog: zero-norm embedding for music id " + std::to_string(id));
  }
  if (name.empty()) name = std::to_string(id);
  ids_.insert(id);
  entries_.push_back({id, std::move(name), std::move(embedding)});
}

MusicCatalog build_seen_catalog(const ModelState& model) {
  MusicCatalog catalog(CatalogSource::PrototypePull);
  for (std::size_t k = 0; k < model.prototype.rows(); ++k) {
    const auto row = model.prototype.row(k);
    if (!(l2_norm(row) > 0.0)) {
      throw DegenerateInputError("build_seen_catalog: prototype row " + std::to_string(k) + " is zero");
    }
    catalog.add(k, Vector(row));
  }
  return catalog;
}

MusicCatalog build_unseen_catalog(const ModelState& model, std::span<const MusicItem> items) {
  MusicCatalog catalog(CatalogSource::EncoderOutput);
  for (const auto& item : items) {
    Vector emb;
    if (item.blocks.size() == 1) {
      emb = encode(model.music, item.blocks[0]);
    } else if (item.blocks.size() == 2) {
      emb = encode(model.music, item.blocks[0], item.blocks[1]);
    } else {
      throw DimensionError("build_unseen_catalog: music item must have one or two feature blocks");
    }
    catalog.add(item.id, std::move(emb), item.name);
  }
  return catalog;
}

MatchResult rank(std::span<const double> query_embedding, const MusicCatalog& catalog, std::size_t k) {
  if (k == 0) throw std::invalid_argument("rank: k must be at least 1");
  if (catalog.empty()) throw std::invalid_argument("rank: empty catalog");
  if (!(l2_norm(query_embedding) > 0.0)) throw DegenerateInputError("rank: zero-norm query embedding");

  MatchResult result;
  result.ranked.reserve(catalog.size());
  for (const auto& e : catalog.entries()) result.ranked.push_back({e.id, cosine(query_embedding, e.embedding.span())});
  const auto order = [](const Match& a, const Match& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  const std::size_t keep = std::min(k, result.ranked.size());
  std::partial_sort(result.ranked.begin(), result.ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.ranked.end(), order);
  result.ranked.resize(keep);
  return result;
}

MatchResult match(const ModelState& model, std::span<const double> video_features, const MusicCatalog& catalog,
                  std::size_t k) {
  const Vector query = encode(model.video, video_features);
  return rank(query.span(), catalog, k);
}

double recall_at_k(std::span<const std::size_t> truth_ranks, std::size_t k) {
  if (k == 0) throw std::invalid_argument("recall_at_k: k must be at least 1");
  if (truth_ranks.empty()) throw std::invalid_argument("recall_at_k: no queries");
  const auto hits = std::count_if(truth_ranks.begin(), truth_ranks.end(), [k](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(truth_ranks.size());
}

double recall_at_k(std::span<const RankedQuery> queries, const MusicCatalog& catalog, std::size_t k) {
  if (k == 0) throw std::invalid_argument("recall_at_k: k must be at least 1");
  if (queries.empty()) throw std::invalid_argument("recall_at_k: no queries");
  std::size_t hits = 0;
  for (const auto& q : queries) {
    if (!catalog.contains(q.truth)) {
      throw DatasetError("recall_at_k: ground truth " + std::to_string(q.truth) + " of query '" + q.result.query +
                         "' is not in the catalog");
    }
    const std::size_t depth = std::min(k, q.result.ranked.size());
    const auto first = q.result.ranked.begin();
    if (std::any_of(first, first + static_cast<std::ptrdiff_t>(depth),
                    [&](const Match& m) { return m.id == q.truth; })) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

MusicCatalog build_catalog(const ModelState& model, const Dataset& data, EvalMode mode) {
  if (mode == EvalMode::Seen) {
    MusicCatalog seen = build_seen_catalog(model);
    MusicCatalog named(CatalogSource::PrototypePull);
    for (const auto& e : seen.entries()) {
      named.add(e.id, e.embedding, e.id < data.music.size() ? data.music.id(e.id) : std::string{});
    }
    return named;
  }
  std::vector<MusicItem> items;
  for (std::size_t k = data.n_train_classes(); k < data.music.size(); ++k) {
    items.push_back({k, music_inputs(model.music, data.music, k), data.music.id(k)});
  }
  return build_unseen_catalog(model, items);
}

std::vector<RankedQuery> rank_split(const ModelState& model, const Dataset& data, Split split,
                                    const MusicCatalog& catalog) {
  std::vector<RankedQuery> out;
  for (const auto& e : data.manifest.entries()) {
    if (e.split != split) continue;
    const auto row = data.videos.find(e.video_id);
    if (!row) throw DatasetError("video '" + e.video_id + "' missing from the video store");
    RankedQuery q{match(model, data.videos.row(*row), catalog, catalog.size()), e.music_class};
    q.result.query = e.video_id;
    out.push_back(std::move(q));
  }
  return out;
}

RecallTable evaluate(const ModelState& model, const Dataset& data, Split split, EvalMode mode,
                     std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("evaluate: no k values requested");
  if ((mode == EvalMode::Unseen) != (split == Split::UnseenTest)) {
    throw DatasetError("evaluate: split " + std::string(to_string(split)) + " is inconsistent with " +
                       std::string(to_string(mode)) + " mode");
  }
  const MusicCatalog catalog = build_catalog(model, data, mode);
  const auto queries = rank_split(model, data, split, catalog);

  std::vector<std::size_t> sorted(ks.begin(), ks.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  RecallTable table;
  for (std::size_t k : sorted) table.rows.emplace_back(k, recall_at_k(queries, catalog, k));
  return table;
}

void write_report(const RecallTable& table, std::ostream& out) {
  char buf[64];
  for (const auto& [k, value] : table.rows) {
    std::snprintf(buf, sizeof buf, "recall@%zu\t%.4f\n", k, value);
    out << buf;
  }
}

}  // namespace xmcm
