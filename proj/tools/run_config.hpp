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

// Flat "key = value" run configuration shared by every subcommand.
//
// Each key is also a command-line flag (underscores become dashes). Values
// are applied on top of the selected profile's defaults: first the config
// file, then flags. The effective configuration is echoed with every key so
// the echo alone reproduces a run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <xmcm/model.hpp>
#include <xmcm/retrieval.hpp>
#include <xmcm/synthetic.hpp>
#include <xmcm/training.hpp>

namespace xmcm::cli {

/// Bad key, bad value or unreadable config file. Maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Profile { Desk, Full };

struct RunConfig {
  Profile profile = Profile::Desk;
  std::uint64_t seed = 0;
  SynthSpec synth;
  TrainConfig train;
  std::vector<std::size_t> hidden;
  std::size_t embedding_dim = 0;
  bool use_low_level = true;

  std::string data;
  std::string out;
  std::string checkpoint;
  EvalMode mode = EvalMode::Seen;
  std::string split;  // empty: seen_test or unseen_test by mode
  std::vector<std::size_t> ks;
  std::size_t top_k = kDefaultTopK;
  std::vector<double> mus;

  /// Train config with the shared seed applied.
  TrainConfig train_config() const;
  SynthSpec synth_spec() const;
  Split eval_split() const;
};

/// Defaults of a profile. Desk: lr 1e-3, batch 32, 100 epochs, l = 16,
/// hidden {64}. Full: lr 1e-5, batch 128, l = 256, hidden {64}.
RunConfig defaults_for(Profile p);

/// All recognised keys in echo order.
const std::vector<std::string>& config_keys();

using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Unknown keys and
/// duplicates are ConfigErrors.
KeyValues parse_config_text(const std::string& text, const std::string& origin);
KeyValues read_config_file(const std::filesystem::path& path);

/// Profile defaults overlaid with `kv`.
RunConfig resolve(const KeyValues& kv);

/// Every key, one "key = value" line each.
std::string echo(const RunConfig& cfg);

}  // namespace xmcm::cli
