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

// Feature stores, dataset manifests and their text formats.
//
// Feature file:
//   dim <d>                      (single-block store, e.g. video)
//   dims <d_low> <d_high>        (two-block store, e.g. music)
//   <id> <v1> ... <vd>           one row per item, values in shortest
//                                round-trip decimal form
//
// Manifest file ('#' starts a comment line):
//   <video_id> <class_index> <split>    split in {train, val, seen_test, unseen_test}
//
// Music class k is the k-th row of the music store. The number of training
// classes is 1 + the largest class index in the train split.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xmcm/numerics.hpp"

namespace xmcm {

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

  /// Same error prefixed with the file it came from; keeps the line number.
  static FormatError in_file(const std::string& path, const FormatError& inner);

 private:
  struct Verbatim {};
  FormatError(Verbatim, const std::string& message, std::size_t line);

  std::size_t line_;
};

/// Dataset-level consistency violation (missing id, class leak, ...).
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::vector<std::size_t> block_dims);

  const std::vector<std::size_t>& block_dims() const { return block_dims_; }
  std::size_t block_count() const { return block_dims_.size(); }
  std::size_t total_dim() const { return total_dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  /// Appends a row; `values` holds all blocks concatenated.
  void add(std::string id, std::span<const double> values);

  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::span<const double> row(std::size_t row) const;
  std::span<const double> block(std::size_t row, std::size_t block) const;
  std::optional<std::size_t> find(std::string_view id) const;

  friend bool operator==(const FeatureStore& a, const FeatureStore& b) {
    return a.block_dims_ == b.block_dims_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::size_t> block_dims_;
  std::size_t total_dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

void write_features(const FeatureStore& store, std::ostream& out);
void write_features(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore read_features(std::istream& in);
FeatureStore read_features(const std::filesystem::path& path);

enum class Split { Train, Validation, SeenTest, UnseenTest };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct ManifestEntry {
  std::string video_id;
  std::size_t music_class = 0;
  Split split = Split::Train;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::vector<ManifestEntry> entries_in(Split split) const;
  std::size_t count(Split split) const;
  /// 1 + the largest class index in the train split; 0 if there is none.
  std::size_t n_train_classes() const { return n_train_classes_; }

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

 private:
  std::vector<ManifestEntry> entries_;
  std::size_t n_train_classes_ = 0;
};

void write_manifest(const DatasetManifest& manifest, std::ostream& out);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct Dataset {
  FeatureStore videos;
  FeatureStore music;
  DatasetManifest manifest;

  std::size_t n_train_classes() const { return manifest.n_train_classes(); }
  std::size_t n_classes() const { return music.size(); }
};

/// Throws DatasetError naming the first offending id or class.
void validate_dataset(const FeatureStore& videos, const FeatureStore& music, const DatasetManifest& manifest);
inline void validate_dataset(const Dataset& d) { validate_dataset(d.videos, d.music, d.manifest); }

// Directory layout used by the CLI.
inline constexpr std::string_view kVideoFile = "videos.txt";
inline constexpr std::string_view kMusicFile = "music.txt";
inline constexpr std::string_view kManifestFile = "manifest.txt";

void save_dataset(const Dataset& d, const std::filesystem::path& dir);
/// Reads and validates.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace xmcm
