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

// Music-to-video matching and Recall@K.
//
// Seen music is matched against the trained prototype rows; unseen music is
// encoded by the music tower. Either way a video query is encoded by the
// video tower and catalog entries are ranked by cosine similarity, highest
// first, ties broken by ascending music id.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "xmcm/data.hpp"
#include "xmcm/model.hpp"

namespace xmcm {

using MusicId = std::uint64_t;

enum class CatalogSource { PrototypePull, EncoderOutput };
enum class EvalMode { Seen, Unseen };

std::string_view to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);

inline constexpr std::size_t kDefaultTopK = 20;

struct CatalogEntry {
  MusicId id = 0;
  std::string name;  // display label; defaults to the decimal id
  Vector embedding;
};

class MusicCatalog {
 public:
  explicit MusicCatalog(CatalogSource source) : source_(source) {}

  /// Rejects duplicate ids, zero-norm embeddings and dimension changes.
  void add(MusicId id, Vector embedding, std::string name = {});

  CatalogSource source() const { return source_; }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(MusicId id) const { return ids_.contains(id); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().embedding.dim(); }

 private:
  CatalogSource source_;
  std::vector<CatalogEntry> entries_;
  std::unordered_set<MusicId> ids_;
};

struct Match {
  MusicId id = 0;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchResult {
  std::string query;
  std::vector<Match> ranked;  // descending score, ascending id on ties
};

/// Entry k is prototype row k with id k.
MusicCatalog build_seen_catalog(const ModelState& model);

struct MusicItem {
  MusicId id = 0;
  std::vector<std::span<const double>> blocks;  // as consumed by the music tower
  std::string name;
};

MusicCatalog build_unseen_catalog(const ModelState& model, std::span<const MusicItem> items);

/// Ranks an already-encoded query against the catalog.
MatchResult rank(std::span<const double> query_embedding, const MusicCatalog& catalog, std::size_t k);

/// Encodes raw video features with the video tower and ranks the top k.
MatchResult match(const ModelState& model, std::span<const double> video_features, const MusicCatalog& catalog,
                  std::size_t k = kDefaultTopK);

/// Fraction of queries whose 1-based ground-truth rank is <= k.
double recall_at_k(std::span<const std::size_t> truth_ranks, std::size_t k);

struct RankedQuery {
  MatchResult result;
  MusicId truth = 0;
};

/// Throws DatasetError when a ground truth is missing from the catalog.
double recall_at_k(std::span<const RankedQuery> queries, const MusicCatalog& catalog, std::size_t k);

struct RecallTable {
  std::vector<std::pair<std::size_t, double>> rows;  // (k, Recall@k) in ascending k
};

/// Catalog for a mode: prototype rows (Seen) or the encoded music rows of
/// every class outside the training set (Unseen). Names come from the store.
MusicCatalog build_catalog(const ModelState& model, const Dataset& data, EvalMode mode);

/// Ranked full catalog for every video of `split`.
std::vector<RankedQuery> rank_split(const ModelState& model, const Dataset& data, Split split,
                                    const MusicCatalog& catalog);

/// Recall@k for each k over `split`. The split must match the mode: seen
/// modes take train/val/seen_test, unseen takes unseen_test.
RecallTable evaluate(const ModelState& model, const Dataset& data, Split split, EvalMode mode,
                     std::span<const std::size_t> ks);

/// "recall@<k>\t<value>" per row, value with four decimals.
void write_report(const RecallTable& table, std::ostream& out);

}  // namespace xmcm
