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

#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace xmcm::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expect) {
  throw ConfigError("invalid value '" + value + "' for '" + key + "': expected " + expect);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_f64(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<T>(parse(key, item)));
  return out;
}

std::string fmt_f64(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt_f64(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define XMCM_U64(name, field)                                                                      \
  Key{name, [](RunConfig& c, const std::string& v) { c.field = to_u64(name, v); },                \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define XMCM_F64(name, field)                                                                      \
  Key{name, [](RunConfig& c, const std::string& v) { c.field = to_f64(name, v); },                \
      [](const RunConfig& c) { return fmt_f64(c.field); }}
#define XMCM_STR(name, field)                                                                      \
  Key{name, [](RunConfig& c, const std::string& v) { c.field = v; },                              \
      [](const RunConfig& c) { return c.field; }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"profile", [](RunConfig&, const std::string&) {},  // applied first, see resolve()
          [](const RunConfig& c) { return std::string(c.profile == Profile::Desk ? "desk" : "full"); }},
      XMCM_U64("seed", seed),
      // synthetic data
      XMCM_U64("n_seen_classes", synth.n_seen_classes),
      XMCM_U64("n_unseen_classes", synth.n_unseen_classes),
      XMCM_U64("vpm_train", synth.vpm_train),
      XMCM_U64("vpm_val", synth.vpm_val),
      XMCM_U64("vpm_seen_test", synth.vpm_seen_test),
      XMCM_U64("vpm_unseen", synth.vpm_unseen),
      XMCM_U64("latent_dim", synth.latent_dim),
      XMCM_U64("video_dim", synth.video_dim),
      XMCM_U64("music_low_dim", synth.music_low_dim),
      XMCM_U64("music_high_dim", synth.music_high_dim),
      XMCM_F64("noise_sigma", synth.noise_sigma),
      XMCM_F64("min_center_angle", synth.min_center_angle_deg),
      // objective
      XMCM_F64("s", train.loss.s),
      XMCM_F64("mu", train.loss.mu_lift),
      XMCM_F64("tau", train.loss.tau),
      XMCM_F64("alpha", train.loss.alpha),
      XMCM_F64("beta", train.loss.beta),
      Key{"lift", [](RunConfig& c, const std::string& v) {
            try {
              c.train.loss.lift_kind = parse_lift_kind(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
          },
          [](const RunConfig& c) { return std::string(to_string(c.train.loss.lift_kind)); }},
      Key{"similarity", [](RunConfig& c, const std::string& v) {
            try {
              c.train.loss.sim_kind = parse_similarity_kind(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
          },
          [](const RunConfig& c) { return std::string(to_string(c.train.loss.sim_kind)); }},
      // optimizer
      XMCM_F64("learning_rate", train.learning_rate),
      XMCM_F64("weight_decay", train.weight_decay),
      XMCM_U64("batch_size", train.batch_size),
      XMCM_U64("epochs", train.epochs),
      XMCM_F64("adam_beta1", train.adam_beta1),
      XMCM_F64("adam_beta2", train.adam_beta2),
      XMCM_F64("adam_eps", train.adam_eps),
      // architecture
      Key{"hidden", [](RunConfig& c, const std::string& v) { c.hidden = to_list<std::size_t>("hidden", v, to_u64); },
          [](const RunConfig& c) { return fmt_list(c.hidden); }},
      XMCM_U64("embedding_dim", embedding_dim),
      Key{"use_low_level", [](RunConfig& c, const std::string& v) { c.use_low_level = to_bool("use_low_level", v); },
          [](const RunConfig& c) { return std::string(c.use_low_level ? "true" : "false"); }},
      // paths
      XMCM_STR("data", data),
      XMCM_STR("out", out),
      XMCM_STR("checkpoint", checkpoint),
      // evaluation
      Key{"mode", [](RunConfig& c, const std::string& v) {
            try {
              c.mode = parse_eval_mode(v);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
          },
          [](const RunConfig& c) { return std::string(to_string(c.mode)); }},
      Key{"split", [](RunConfig& c, const std::string& v) {
            if (!v.empty() && !parse_split(v)) bad_value("split", v, "train, val, seen_test or unseen_test");
            c.split = v;
          },
          [](const RunConfig& c) { return c.split; }},
      Key{"k", [](RunConfig& c, const std::string& v) { c.ks = to_list<std::size_t>("k", v, to_u64); },
          [](const RunConfig& c) { return fmt_list(c.ks); }},
      XMCM_U64("top_k", top_k),
      Key{"mus", [](RunConfig& c, const std::string& v) { c.mus = to_list<double>("mus", v, to_f64); },
          [](const RunConfig& c) { return fmt_list(c.mus); }},
  };
  return table;
}

#undef XMCM_U64
#undef XMCM_F64
#undef XMCM_STR

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg = train;
  cfg.seed = seed;
  return cfg;
}

SynthSpec RunConfig::synth_spec() const {
  SynthSpec spec = synth;
  spec.seed = seed;
  return spec;
}

Split RunConfig::eval_split() const {
  if (!split.empty()) return *parse_split(split);
  return mode == EvalMode::Seen ? Split::SeenTest : Split::UnseenTest;
}

RunConfig defaults_for(Profile p) {
  RunConfig c;
  c.profile = p;
  c.synth = easy_profile();
  c.hidden = {kDeskHiddenDim};
  c.ks = {1, 5, 10, 20};
  c.mus = {0.01, 0.05, 0.1, 0.15, 0.2};
  if (p == Profile::Desk) {
    c.train = desk_profile();
    c.embedding_dim = kDeskEmbeddingDim;
  } else {
    c.train = TrainConfig{};
    c.embedding_dim = 256;
  }
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    return out;
  }();
  return names;
}

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto& names = config_keys();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.string());
}

RunConfig resolve(const KeyValues& kv) {
  Profile profile = Profile::Desk;
  if (const auto it = kv.find("profile"); it != kv.end()) {
    if (it->second == "desk") {
      profile = Profile::Desk;
    } else if (it->second == "full") {
      profile = Profile::Full;
    } else {
      bad_value("profile", it->second, "desk or full");
    }
  }
  RunConfig cfg = defaults_for(profile);
  for (const auto& key : keys()) {
    if (const auto it = kv.find(key.name); it != kv.end()) key.set(cfg, it->second);
  }
  for (const auto& [name, value] : kv) {
    const auto& names = config_keys();
    if (std::find(names.begin(), names.end(), name) == names.end()) throw ConfigError("unknown key '" + name + "'");
  }
  return cfg;
}

std::string echo(const RunConfig& cfg) {
  std::string out;
  for (const auto& key : keys()) out += key.name + " = " + key.get(cfg) + "\n";
  return out;
}

}  // namespace xmcm::cli
