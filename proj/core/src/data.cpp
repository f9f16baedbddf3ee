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

#include "xmcm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace xmcm {

FormatError::FormatError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

FormatError::FormatError(Verbatim, const std::string& message, std::size_t line)
    : std::runtime_error(message), line_(line) {}

FormatError FormatError::in_file(const std::string& path, const FormatError& inner) {
  return FormatError(Verbatim{}, path + ": " + inner.what(), inner.line());
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_blank(std::string_view line) { return split_ws(line).empty(); }

double parse_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range) {
    throw FormatError("non-finite value '" + std::string(tok) + "'", line_no);
  }
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError("malformed number '" + std::string(tok) + "'", line_no);
  }
  if (!std::isfinite(v)) throw FormatError("non-finite value '" + std::string(tok) + "'", line_no);
  return v;
}

std::size_t parse_size(std::string_view tok, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError("malformed non-negative integer '" + std::string(tok) + "'", line_no);
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

FeatureStore::FeatureStore(std::vector<std::size_t> block_dims) : block_dims_(std::move(block_dims)) {
  if (block_dims_.empty() || block_dims_.size() > 2) {
    throw std::invalid_argument("FeatureStore: one or two feature blocks expected");
  }
  for (std::size_t d : block_dims_) {
    if (d == 0) throw DimensionError("FeatureStore: block dimensions must be positive");
  }
  total_dim_ = std::accumulate(block_dims_.begin(), block_dims_.end(), std::size_t{0});
}

void FeatureStore::add(std::string id, std::span<const double> values) {
  if (id.empty()) throw std::invalid_argument("FeatureStore: empty id");
  detail::require_same_dim(values.size(), total_dim_, ("FeatureStore row '" + id + "'").c_str());
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw NonFiniteError("FeatureStore: non-finite value in row '" + id + "'");
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw std::invalid_argument("FeatureStore: duplicate id '" + id + "'");
  }
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::span<const double> FeatureStore::row(std::size_t r) const {
  if (r >= ids_.size()) throw IndexError("FeatureStore: row out of range");
  return std::span<const double>(values_).subspan(r * total_dim_, total_dim_);
}

std::span<const double> FeatureStore::block(std::size_t r, std::size_t b) const {
  if (b >= block_dims_.size()) throw IndexError("FeatureStore: block out of range");
  const std::size_t offset = b == 0 ? 0 : block_dims_[0];
  return row(r).subspan(offset, block_dims_[b]);
}

std::optional<std::size_t> FeatureStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_features(const FeatureStore& store, std::ostream& out) {
  std::string text;
  if (store.block_count() == 1) {
    text = "dim " + std::to_string(store.block_dims()[0]) + "\n";
  } else {
    text = "dims " + std::to_string(store.block_dims()[0]) + " " + std::to_string(store.block_dims()[1]) + "\n";
  }
  for (std::size_t r = 0; r < store.size(); ++r) {
    text += store.id(r);
    for (double v : store.row(r)) {
      text += ' ';
      append_double(text, v);
    }
    text += '\n';
  }
  out << text;
  if (!out) throw std::runtime_error("write_features: stream failure");
}

void write_features(const FeatureStore& store, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_features(store, out);
}

FeatureStore read_features(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<FeatureStore> store;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split_ws(line);
    if (!store) {
      std::vector<std::size_t> dims;
      if (tokens[0] == "dim" && tokens.size() == 2) {
        dims = {parse_size(tokens[1], line_no)};
      } else if (tokens[0] == "dims" && tokens.size() == 3) {
        dims = {parse_size(tokens[1], line_no), parse_size(tokens[2], line_no)};
      } else {
        throw FormatError("expected header 'dim <d>' or 'dims <d_low> <d_high>'", line_no);
      }
      if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
        throw FormatError("dimensions must be positive", line_no);
      }
      store.emplace(std::move(dims));
      continue;
    }
    const std::string id(tokens[0]);
    if (tokens.size() - 1 != store->total_dim()) {
      throw FormatError("row '" + id + "' has " + std::to_string(tokens.size() - 1) + " values, header declares " +
                            std::to_string(store->total_dim()),
                        line_no);
    }
    if (store->find(id)) throw FormatError("duplicate id '" + id + "'", line_no);
    std::vector<double> values(tokens.size() - 1);
    for (std::size_t i = 1; i < tokens.size(); ++i) values[i - 1] = parse_double(tokens[i], line_no);
    store->add(id, values);
  }
  if (!store) throw FormatError("missing header");
  return std::move(*store);
}

FeatureStore read_features(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_features(in);
  } catch (const FormatError& e) {
    throw FormatError::in_file(path.string(), e);
  }
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::SeenTest: return "seen_test";
    case Split::UnseenTest: return "unseen_test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Validation;
  if (s == "seen_test") return Split::SeenTest;
  if (s == "unseen_test") return Split::UnseenTest;
  return std::nullopt;
}

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.split == Split::Train) n_train_classes_ = std::max(n_train_classes_, e.music_class + 1);
  }
}

std::vector<ManifestEntry> DatasetManifest::entries_in(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [split](const ManifestEntry& e) { return e.split == split; });
  return out;
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [split](const ManifestEntry& e) { return e.split == split; }));
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
  std::string text = "# video_id class split\n";
  for (const auto& e : manifest.entries()) {
    text += e.video_id + ' ' + std::to_string(e.music_class) + ' ' + std::string(to_string(e.split)) + '\n';
  }
  out << text;
  if (!out) throw std::runtime_error("write_manifest: stream failure");
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_manifest(manifest, out);
}

DatasetManifest read_manifest(std::istream& in) {
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens.size() != 3) throw FormatError("expected '<video_id> <class_index> <split>'", line_no);
    const auto split = parse_split(tokens[2]);
    if (!split) throw FormatError("unknown split '" + std::string(tokens[2]) + "'", line_no);
    entries.push_back({std::string(tokens[0]), parse_size(tokens[1], line_no), *split});
  }
  return DatasetManifest(std::move(entries));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_manifest(in);
  } catch (const FormatError& e) {
    throw FormatError::in_file(path.string(), e);
  }
}

void validate_dataset(const FeatureStore& videos, const FeatureStore& music, const DatasetManifest& manifest) {
  if (videos.block_count() != 1) throw DatasetError("video store must have exactly one feature block");
  const std::size_t n_train = manifest.n_train_classes();
  std::unordered_set<std::string_view> seen_ids;
  for (const auto& e : manifest.entries()) {
    if (!seen_ids.insert(e.video_id).second) {
      throw DatasetError("video '" + e.video_id + "' is listed more than once (splits must be disjoint)");
    }
    if (!videos.find(e.video_id)) throw DatasetError("video '" + e.video_id + "' missing from the video store");
    if (e.music_class >= music.size()) {
      throw DatasetError("video '" + e.video_id + "' references music class " + std::to_string(e.music_class) +
                         " but the music store has " + std::to_string(music.size()) + " rows");
    }
    const bool unseen = e.split == Split::UnseenTest;
    if (unseen && e.music_class < n_train) {
      throw DatasetError("class leak: unseen_test video '" + e.video_id + "' uses training class " +
                         std::to_string(e.music_class));
    }
    if (!unseen && e.music_class >= n_train) {
      throw DatasetError("video '" + e.video_id + "' in split " + std::string(to_string(e.split)) +
                         " uses class " + std::to_string(e.music_class) + " outside the " + std::to_string(n_train) +
                         " training classes");
    }
  }
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_features(d.videos, dir / kVideoFile);
  write_features(d.music, dir / kMusicFile);
  write_manifest(d.manifest, dir / kManifestFile);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d{read_features(dir / kVideoFile), read_features(dir / kMusicFile), read_manifest(dir / kManifestFile)};
  validate_dataset(d);
  return d;
}

}  // namespace xmcm
