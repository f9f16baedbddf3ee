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

#include "commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <xmcm/checkpoint.hpp>
#include <xmcm/data.hpp>
#include <xmcm/retrieval.hpp>
#include <xmcm/synthetic.hpp>
#include <xmcm/training.hpp>

#include "run_config.hpp"

namespace xmcm::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

std::string dashed(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

std::string fmt_f64(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write failure on '" + path.string() + "'");
}

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option --") + flag);
  return value;
}

/// Creates --out (when given) and echoes the effective configuration there.
std::optional<fs::path> prepare_out(const RunConfig& cfg) {
  if (cfg.out.empty()) return std::nullopt;
  fs::create_directories(cfg.out);
  write_text(fs::path(cfg.out) / kEffectiveConfigFile, echo(cfg));
  return fs::path(cfg.out);
}

void check_compatible(const ModelState& model, const Dataset& data) {
  detail::require_same_dim(model.video.input_dims()[0], data.videos.total_dim(), "checkpoint video tower vs data");
  const auto& blocks = data.music.block_dims();
  if (model.music.input_arity() == 2) {
    if (blocks.size() != 2) throw DimensionError("checkpoint music tower expects two feature blocks");
    detail::require_same_dim(model.music.input_dims()[0], blocks[0], "checkpoint music low-level block vs data");
    detail::require_same_dim(model.music.input_dims()[1], blocks[1], "checkpoint music high-level block vs data");
  } else {
    detail::require_same_dim(model.music.input_dims()[0], blocks.back(), "checkpoint music block vs data");
  }
  detail::require_same_dim(model.n_classes(), data.n_train_classes(), "checkpoint prototype rows vs training classes");
}

ModelShape model_shape(const RunConfig& cfg, const Dataset& data) {
  return shape_for(data, cfg.hidden, cfg.embedding_dim, cfg.use_low_level);
}

std::string history_text(const TrainHistory& history) {
  std::string text = "epoch\tloss\tval_recall@10\n";
  for (const auto& e : history.epochs) {
    text += std::to_string(e.epoch) + "\t" + fixed(e.loss, 6) + "\t" +
            (e.val_recall_at_10 ? fixed(*e.val_recall_at_10, 4) : std::string("-")) + "\n";
  }
  return text;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "out");
  const SynthSpec spec = cfg.synth_spec();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const SynthDataset synth = generate_synthetic(spec);
  const auto dir = prepare_out(cfg);
  save_dataset(synth.data, *dir);

  const auto& m = synth.data.manifest;
  std::ostringstream summary;
  summary << "seen_classes\t" << spec.n_seen_classes << "\n"
          << "unseen_classes\t" << spec.n_unseen_classes << "\n";
  for (Split s : {Split::Train, Split::Validation, Split::SeenTest, Split::UnseenTest}) {
    summary << to_string(s) << "\t" << m.count(s) << "\n";
  }
  out << summary.str();
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const Dataset data = load_dataset(require(cfg.data, "data"));
  require(cfg.out, "out");
  const TrainConfig tcfg = cfg.train_config();
  try {
    tcfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const ModelShape shape = model_shape(cfg, data);
  const auto dir = prepare_out(cfg);

  Rng init_rng(cfg.seed);
  ModelState model = init_model(shape, init_rng);
  out << "epoch\tloss\tval_recall@10\n";
  const TrainResult result = train(std::move(model), data, tcfg, [&out](const EpochRecord& e) {
    out << e.epoch << "\t" << fixed(e.loss, 6) << "\t"
        << (e.val_recall_at_10 ? fixed(*e.val_recall_at_10, 4) : std::string("-")) << "\n";
  });

  const fs::path ckpt = cfg.checkpoint.empty() ? *dir / kCheckpointFile : fs::path(cfg.checkpoint);
  save_checkpoint(result.model, result.adam, tcfg, ckpt);
  write_text(*dir / kHistoryFile, history_text(result.history));
  if (result.history.best_epoch) out << "# best validation epoch " << *result.history.best_epoch << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(fs::path(require(cfg.checkpoint, "checkpoint")));
  const Dataset data = load_dataset(require(cfg.data, "data"));
  check_compatible(ck.model, data);
  if (cfg.ks.empty()) throw ConfigError("--k needs at least one value");
  for (std::size_t k : cfg.ks) {
    if (k == 0) throw ConfigError("--k values must be positive");
  }
  const RecallTable table = evaluate(ck.model, data, cfg.eval_split(), cfg.mode, cfg.ks);
  std::ostringstream report;
  write_report(table, report);
  out << report.str();
  if (const auto dir = prepare_out(cfg)) {
    write_text(*dir / ("report_" + std::string(to_string(cfg.mode)) + ".tsv"), report.str());
  }
  return kExitOk;
}

struct MatchInputs {
  std::string video_id;
  std::string video_features;
  std::string music_features;
};

int cmd_match(const RunConfig& cfg, const MatchInputs& in, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(fs::path(require(cfg.checkpoint, "checkpoint")));
  if (cfg.top_k == 0) throw ConfigError("--top-k must be positive");
  if (in.video_id.empty() == in.video_features.empty()) {
    throw UsageError("match needs exactly one of --video-id or --video-features");
  }

  std::optional<Dataset> data;
  if (!cfg.data.empty()) {
    data = load_dataset(cfg.data);
    check_compatible(ck.model, *data);
  }

  std::optional<MusicCatalog> catalog;
  if (!in.music_features.empty()) {
    if (cfg.mode != EvalMode::Unseen) throw UsageError("--music-features requires --mode unseen");
    const FeatureStore store = read_features(fs::path(in.music_features));
    std::vector<MusicItem> items;
    for (std::size_t r = 0; r < store.size(); ++r) items.push_back({r, music_inputs(ck.model.music, store, r), store.id(r)});
    catalog = build_unseen_catalog(ck.model, items);
  } else if (data) {
    catalog = build_catalog(ck.model, *data, cfg.mode);
  } else if (cfg.mode == EvalMode::Seen) {
    catalog = build_seen_catalog(ck.model);
  } else {
    throw UsageError("unseen matching needs --data or --music-features");
  }
  if (catalog->empty()) throw std::runtime_error("match: empty music catalog");

  std::vector<std::pair<std::string, std::vector<double>>> queries;
  if (!in.video_id.empty()) {
    if (!data) throw UsageError("--video-id requires --data");
    const auto row = data->videos.find(in.video_id);
    if (!row) throw std::runtime_error("unknown video id '" + in.video_id + "'");
    const auto values = data->videos.row(*row);
    queries.emplace_back(in.video_id, std::vector<double>(values.begin(), values.end()));
  } else {
    const FeatureStore store = read_features(fs::path(in.video_features));
    for (std::size_t r = 0; r < store.size(); ++r) {
      const auto values = store.row(r);
      queries.emplace_back(store.id(r), std::vector<double>(values.begin(), values.end()));
    }
  }

  std::map<MusicId, std::string> names;
  for (const auto& e : catalog->entries()) names[e.id] = e.name;
  std::string text;
  for (const auto& [id, features] : queries) {
    const MatchResult result = match(ck.model, features, *catalog, cfg.top_k);
    text += "# query " + id + "\n";
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
      text += std::to_string(i + 1) + "\t" + names[result.ranked[i].id] + "\t" + fixed(result.ranked[i].score, 6) + "\n";
    }
  }
  out << text;
  if (const auto dir = prepare_out(cfg)) write_text(*dir / "matches.tsv", text);
  return kExitOk;
}

int cmd_sweep_margin(const RunConfig& cfg, std::ostream& out) {
  const Dataset data = load_dataset(require(cfg.data, "data"));
  if (cfg.mus.empty()) throw ConfigError("--mus needs at least one margin");
  const ModelShape shape = model_shape(cfg, data);
  const auto dir = prepare_out(cfg);

  Rng init_rng(cfg.seed);
  const ModelState initial = init_model(shape, init_rng);
  const std::size_t ks[] = {20};

  std::string text = "loss_kind\tmu\trecall@20\n";
  out << text;
  for (LiftKind kind : {LiftKind::CosFace, LiftKind::ArcFace}) {
    for (double mu : cfg.mus) {
      TrainConfig tcfg = cfg.train_config();
      tcfg.loss.lift_kind = kind;
      tcfg.loss.mu_lift = mu;
      try {
        tcfg.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const TrainResult result = train(initial, data, tcfg);
      const RecallTable table = evaluate(result.model, data, Split::SeenTest, EvalMode::Seen, ks);
      const std::string line =
          std::string(to_string(kind)) + "\t" + fmt_f64(mu) + "\t" + fixed(table.rows.front().second, 4) + "\n";
      out << line << std::flush;
      text += line;
    }
  }
  if (dir) write_text(*dir / kSweepFile, text);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal video/music metric learning toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  struct Sub {
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::string config;
    MatchInputs match;
  };
  std::map<std::string, Sub> subs;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen", "Generate a synthetic dataset"},
      {"train", "Train both towers and the shared prototype"},
      {"eval", "Recall@K on the seen or unseen split"},
      {"match", "Top-k music for one or more videos"},
      {"sweep-margin", "Seen Recall@20 across class margins for CosFace and ArcFace"},
  };
  for (const auto& [name, help] : commands) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, help);
    sub.app->add_option("--config", sub.config, "Config file of 'key = value' lines");
    for (const auto& key : config_keys()) sub.app->add_option("--" + dashed(key), sub.values[key], key);
    if (name == "match") {
      sub.app->add_option("--video-id", sub.match.video_id, "Video id from the --data video store");
      sub.app->add_option("--video-features", sub.match.video_features, "Feature file of query videos");
      sub.app->add_option("--music-features", sub.match.music_features, "Feature file of unseen music");
    }
  }

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("xmcm");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'xmcm --help' for usage\n";
    return kExitUsage;
  }

  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    try {
      KeyValues kv;
      if (!sub.config.empty()) kv = read_config_file(sub.config);
      for (const auto& key : config_keys()) {
        if (sub.app->count("--" + dashed(key)) > 0) kv[key] = sub.values[key];
      }
      const RunConfig cfg = resolve(kv);
      if (name == "gen") return cmd_gen(cfg, out);
      if (name == "train") return cmd_train(cfg, out);
      if (name == "eval") return cmd_eval(cfg, out);
      if (name == "match") return cmd_match(cfg, sub.match, out);
      return cmd_sweep_margin(cfg, out);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}

}  // namespace xmcm::cli
