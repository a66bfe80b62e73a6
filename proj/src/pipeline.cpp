// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hapcap/error.hpp"
#include "hapcap/features.hpp"
#include "hapcap/hashing.hpp"
#include "hapcap/random.hpp"
#include "hapcap/retrieval.hpp"
#include "hapcap/signal_io.hpp"

namespace hapcap {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw InvalidInput(fmt::format("config key '{}': cannot parse '{}'", key, value));
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  std::string item;
  std::istringstream in{std::string(value)};
  while (std::getline(in, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw InvalidInput(fmt::format("config key '{}' is empty", key));
  return out;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw InvalidInput(fmt::format("{} path is required", what));
  if (!fs::exists(p)) throw IoError(fmt::format("{} '{}' does not exist", what, p.string()));
}

fs::path prepare_out(const PipelineConfig& c) {
  if (c.out_dir.empty()) throw InvalidInput("output directory is required");
  fs::create_directories(c.out_dir);
  return c.out_dir;
}

json train_config_json(const TrainConfig& t) {
  return {{"alpha", t.alpha},
          {"tau", t.tau},
          {"n", t.n},
          {"m", t.m},
          {"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"kappa", t.kappa},
          {"k", t.k},
          {"category", to_string(t.category_scope)},
          {"representation", to_string(t.representation)}};
}

std::vector<std::pair<std::string, fs::path>> expand_input(const StampInput& in) {
  std::vector<std::pair<std::string, fs::path>> files;
  if (fs::is_directory(in.path)) {
    for (const auto& e : fs::recursive_directory_iterator(in.path)) {
      if (e.is_regular_file()) {
        files.emplace_back(in.role + "/" + fs::relative(e.path(), in.path).generic_string(),
                           e.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(in.role + "/" + in.path.filename().generic_string(), in.path);
  }
  return files;
}

std::vector<CaptionRecord> read_captions(const fs::path& path) {
  require_path(path, "captions");
  auto load = load_captions(path);
  if (load.dropped_na + load.dropped_empty > 0) {
    std::cerr << fmt::format("note: dropped {} not-applicable and {} empty captions\n",
                             load.dropped_na, load.dropped_empty);
  }
  return std::move(load.records);
}

SignalDirectory read_signals(const fs::path& dir) {
  require_path(dir, "signals directory");
  auto loaded = load_signal_directory(dir);
  for (const auto& f : loaded.failures) {
    std::cerr << fmt::format("error: {}: {}\n", f.path.string(), f.message);
  }
  return loaded;
}

EvalOptions eval_options(const PipelineConfig& c) { return {c.train.k, c.train.kappa}; }

EncoderState initial_state(const PipelineConfig& c, const DatasetSplit& split) {
  std::vector<CaptionRecord> train_captions;
  for (const auto& p : split.train) train_captions.push_back(p.caption);
  return init_encoder(c.dims, build_vocab(train_captions), derive_seed(c.train.seed, 2),
                      std::min(c.train.n, c.dims.text_depth),
                      std::min(c.train.m, c.dims.haptic_depth));
}

std::vector<StampInput> data_inputs(const PipelineConfig& c) {
  return {{"signals", c.signals_dir}, {"captions", c.captions}};
}

}  // namespace

void apply_config_entry(PipelineConfig& c, std::string_view raw_key,
                        std::string_view raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  auto& t = c.train;
  if (key == "alpha") t.alpha = parse_number<double>(key, value);
  else if (key == "tau") t.tau = parse_number<double>(key, value);
  else if (key == "n") t.n = parse_number<int>(key, value);
  else if (key == "m") t.m = parse_number<int>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<int>(key, value);
  else if (key == "epochs") t.epochs = parse_number<int>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "kappa") t.kappa = parse_number<double>(key, value);
  else if (key == "k") t.k = parse_number<int>(key, value);
  else if (key == "category" || key == "category_scope") t.category_scope = parse_category_scope(value);
  else if (key == "representation") t.representation = parse_pair_representation(value);
  else if (key == "threshold") c.threshold = parse_number<double>(key, value);
  else if (key == "embed_dim") c.dims.embed_dim = parse_number<int>(key, value);
  else if (key == "hidden") c.dims.text_hidden = c.dims.haptic_hidden = parse_number<int>(key, value);
  else if (key == "depth") c.dims.text_depth = c.dims.haptic_depth = parse_number<int>(key, value);
  else if (key == "d") c.dims.d = c.dims.d1 = c.dims.d2 = parse_number<int>(key, value);
  else if (key == "train_fraction") c.fractions.train = parse_number<double>(key, value);
  else if (key == "valid_fraction") c.fractions.valid = parse_number<double>(key, value);
  else if (key == "test_fraction") c.fractions.test = parse_number<double>(key, value);
  else if (key == "grid_alpha") c.grid.alphas = parse_list<double>(key, value);
  else if (key == "grid_tau") c.grid.taus = parse_list<double>(key, value);
  else if (key == "grid_n") c.grid.ns = parse_list<int>(key, value);
  else if (key == "grid_m") c.grid.ms = parse_list<int>(key, value);
  else if (key == "signals") c.signals_dir = value;
  else if (key == "captions") c.captions = value;
  else if (key == "out") c.out_dir = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else throw InvalidInput(fmt::format("unknown config key '{}'", key));
}

void load_config_file(const fs::path& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(fmt::format("{}:{}: expected key=value", path.string(), lineno));
    }
    try {
      apply_config_entry(config, t.substr(0, eq), t.substr(eq + 1));
    } catch (const InvalidInput& e) {
      throw InvalidInput(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
}

std::string config_json(const PipelineConfig& c) {
  json j;
  j["train"] = train_config_json(c.train);
  j["dims"] = {{"embed_dim", c.dims.embed_dim},       {"text_hidden", c.dims.text_hidden},
               {"text_depth", c.dims.text_depth},     {"haptic_input", c.dims.haptic_input},
               {"haptic_hidden", c.dims.haptic_hidden}, {"haptic_depth", c.dims.haptic_depth},
               {"d1", c.dims.d1},                     {"d2", c.dims.d2},
               {"d", c.dims.d}};
  j["fractions"] = {{"train", c.fractions.train},
                    {"valid", c.fractions.valid},
                    {"test", c.fractions.test}};
  j["grid"] = {{"alpha", c.grid.alphas}, {"tau", c.grid.taus}, {"n", c.grid.ns}, {"m", c.grid.ms}};
  j["threshold"] = c.threshold;
  return j.dump(2);
}

std::string make_stamp(std::string_view command, const PipelineConfig& config,
                       std::span<const StampInput> inputs) {
  json j;
  j["command"] = command;
  j["seed"] = config.train.seed;
  j["config"] = json::parse(config_json(config));
  json files = json::array();
  std::string combined;
  for (const auto& in : inputs) {
    if (in.path.empty()) continue;
    for (const auto& [name, path] : expand_input(in)) {
      const std::string digest = sha256_file(path);
      files.push_back({{"name", name}, {"sha256", digest}});
      combined += name + '\0' + digest + '\n';
    }
  }
  j["inputs"] = files;
  j["inputs_sha256"] = sha256_hex(combined);
  return j.dump(2) + "\n";
}

void write_stamp(std::string_view command, const PipelineConfig& config,
                 std::span<const StampInput> inputs) {
  write_text(prepare_out(config) / "stamp.json", make_stamp(command, config, inputs));
}

TextEmbedder bag_of_words_embedder(std::span<const CaptionRecord> captions) {
  std::vector<std::string> texts;
  for (const auto& c : captions) texts.push_back(c.text);
  if (texts.empty()) {
    return [](const std::string&) { return std::vector<double>{}; };
  }
  auto vocab = std::make_shared<Vocabulary>(build_vocab_from_texts(texts));
  return [vocab](const std::string& text) {
    std::vector<double> v(vocab->size(), 0.0);
    for (const auto& tok : tokenize(text)) v[vocab->lookup(tok)] += 1.0;
    return v;
  };
}

TextEmbedder encoder_embedder(const EncoderState& state) {
  auto s = std::make_shared<EncoderState>(state);
  return [s](const std::string& text) {
    const auto e = project(*s, encode_text(*s, text), Modality::kText).values;
    return std::vector<double>(e.data(), e.data() + e.size());
  };
}

std::string filter_report_json(std::span<const CaptionRecord> captions,
                               std::span<const std::optional<double>> scores,
                               const FilterResult& result, double threshold) {
  struct Counts {
    std::size_t total = 0, kept = 0, removed = 0, unscored = 0;
  };
  std::map<Category, Counts> counts;
  std::set<std::string> before;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    auto& c = counts[captions[i].category];
    ++c.total;
    before.insert(captions[i].signal_id);
    if (!scores[i]) ++c.unscored;
  }
  for (const auto& r : result.kept) ++counts[r.category].kept;
  for (const auto& r : result.removed) ++counts[r.category].removed;

  json j;
  j["threshold"] = threshold;
  json cats = json::object();
  Counts all;
  for (Category cat : kAllCategories) {
    const auto& c = counts[cat];
    cats[to_string(cat)] = {{"total", c.total},
                            {"kept", c.kept},
                            {"removed", c.removed},
                            {"unscored", c.unscored}};
    all.total += c.total;
    all.kept += c.kept;
    all.removed += c.removed;
    all.unscored += c.unscored;
  }
  j["categories"] = cats;
  j["total"] = {{"total", all.total},
                {"kept", all.kept},
                {"removed", all.removed},
                {"unscored", all.unscored}};
  j["signals_before"] = before.size();
  j["signals_after"] = result.retained_signals.size();
  j["dropped_signals"] = result.dropped_signals;
  return j.dump(2) + "\n";
}

int cmd_synth(const PipelineConfig& config, const SyntheticSpec& spec) {
  const fs::path out = prepare_out(config);
  const auto corpus = make_synthetic_corpus(spec);
  fs::create_directories(out / "signals");
  for (const auto& s : corpus.signals) write_wav(out / "signals" / (s.id + ".wav"), s);
  write_captions(out / "captions.jsonl", corpus.captions);
  json j;
  j["classes"] = spec.classes;
  j["signals_per_class"] = spec.signals_per_class;
  j["participants"] = spec.participants;
  j["sample_rate"] = spec.sample_rate;
  j["duration_s"] = spec.duration_s;
  j["overlap"] = spec.overlap;
  j["seed"] = spec.seed;
  j["signal_class"] = corpus.signal_class;
  write_text(out / "synthetic.json", j.dump(2) + "\n");
  write_stamp("synth", config, {});
  return 0;
}

int cmd_augment(const PipelineConfig& config) {
  const auto loaded = read_signals(config.signals_dir);
  const fs::path out = prepare_out(config);
  const fs::path sig_dir = out / "signals";
  fs::create_directories(sig_dir);
  if (loaded.signals.empty() && loaded.failures.empty()) {
    std::cerr << "warning: no signals found in " << config.signals_dir.string() << "\n";
  }
  json entries = json::array();
  auto record = [&](const VibrationSignal& s) {
    const std::string file = s.id + ".wav";
    write_wav(sig_dir / file, s);
    entries.push_back({{"id", s.id},
                       {"file", "signals/" + file},
                       {"origin", to_string(s.provenance.origin)},
                       {"parents", s.provenance.parent_ids},
                       {"op", s.provenance.op_tag},
                       {"sample_rate", s.sample_rate},
                       {"samples", s.samples.size()},
                       {"duration_s", s.duration_seconds()}});
  };
  for (const auto& s : loaded.signals) {
    const auto base = normalize_duration(s);
    record(base);
    for (const auto& v : augment_suite(base, derive_seed(config.train.seed, stable_hash(s.id)))) {
      record(v);
    }
  }
  json failures = json::array();
  for (const auto& f : loaded.failures) {
    failures.push_back({{"file", f.path.filename().string()}, {"error", f.message}});
  }
  json manifest;
  manifest["seed"] = config.train.seed;
  manifest["inputs"] = loaded.signals.size();
  manifest["total"] = entries.size();
  manifest["signals"] = entries;
  manifest["failures"] = failures;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  const std::vector<StampInput> inputs = {{"signals", config.signals_dir}};
  write_stamp("augment", config, inputs);
  return loaded.failures.empty() ? 0 : 1;
}

int cmd_filter(const PipelineConfig& config) {
  const auto captions = read_captions(config.captions);
  TextEmbedder embed;
  std::vector<StampInput> inputs = {{"captions", config.captions}};
  if (!config.checkpoint.empty()) {
    embed = encoder_embedder(load_checkpoint(config.checkpoint));
    inputs.push_back({"checkpoint", config.checkpoint});
  } else {
    embed = bag_of_words_embedder(captions);
  }
  const auto scores = agreement_scores(captions, embed);
  const auto result = filter_low_agreement(captions, scores, config.threshold);
  const fs::path out = prepare_out(config);
  write_captions(out / "kept.jsonl", result.kept);
  write_captions(out / "removed.jsonl", result.removed);
  std::string csv = "signal_id,participant_id,category,score\n";
  for (std::size_t i = 0; i < captions.size(); ++i) {
    csv += fmt::format("{},{},{},{}\n", captions[i].signal_id, captions[i].participant_id,
                       to_string(captions[i].category),
                       scores[i] ? fmt::format("{:.17g}", *scores[i]) : std::string());
  }
  write_text(out / "scores.csv", csv);
  write_text(out / "filter_report.json",
             filter_report_json(captions, scores, result, config.threshold));
  write_stamp("filter", config, inputs);
  return 0;
}

int cmd_features(const PipelineConfig& config, bool spectrograms) {
  const auto loaded = read_signals(config.signals_dir);
  const fs::path out = prepare_out(config);
  export_feature_table(loaded.signals, out / "features.csv");
  if (spectrograms) {
    fs::create_directories(out / "spectrograms");
    for (const auto& s : loaded.signals) {
      write_spectrogram_csv(out / "spectrograms" / (s.id + ".csv"), log_mel_spectrogram(s));
    }
  }
  const std::vector<StampInput> inputs = {{"signals", config.signals_dir}};
  write_stamp("features", config, inputs);
  return loaded.failures.empty() ? 0 : 1;
}

int cmd_stats(const PipelineConfig& config) {
  const auto captions = read_captions(config.captions);
  const fs::path out = prepare_out(config);
  write_text(out / "diversity.csv", diversity_table_csv(captions));
  const std::vector<StampInput> inputs = {{"captions", config.captions}};
  write_stamp("stats", config, inputs);
  return 0;
}

PreparedData prepare_data(const PipelineConfig& config) {
  const auto captions = read_captions(config.captions);
  const auto loaded = read_signals(config.signals_dir);
  if (!loaded.failures.empty()) throw IoError("some signal files could not be read");
  std::map<std::string, const VibrationSignal*> by_id;
  for (const auto& s : loaded.signals) by_id[s.id] = &s;
  std::set<std::string> ids;
  for (const auto& [id, s] : by_id) ids.insert(id);

  PreparedData data;
  data.pairs = build_pairs(captions, ids);
  if (data.pairs.empty()) throw InvalidInput("no caption pairs to work with");
  data.split = split_dataset(data.pairs, config.train.seed, config.fractions);
  std::vector<VibrationSignal> used;
  std::set<std::string> seen;
  for (const auto& p : data.pairs) {
    if (seen.insert(p.signal_id).second) used.push_back(normalize_duration(*by_id.at(p.signal_id)));
  }
  data.haptics = compute_haptic_inputs(used);
  return data;
}

int cmd_train(const PipelineConfig& config) {
  validate(config.train);
  const auto data = prepare_data(config);
  const auto init = initial_state(config, data.split);
  const auto result = train(init, data.split, data.haptics, config.train);
  const fs::path out = prepare_out(config);
  save_checkpoint(out / "checkpoint.bin", result.state);
  write_text(out / "history.csv", history_csv(result.history));
  json summary;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_p_at_k"] = result.best_metric;
  summary["pairs"] = {{"train", data.split.train.size()},
                      {"valid", data.split.valid.size()},
                      {"test", data.split.test.size()}};
  write_text(out / "train_summary.json", summary.dump(2) + "\n");
  write_stamp("train", config, data_inputs(config));
  return 0;
}

int cmd_grid(const PipelineConfig& config) {
  validate(config.train);
  const auto data = prepare_data(config);
  const auto init = initial_state(config, data.split);
  const auto result = grid_search(init, data.split, data.haptics, config.train, config.grid);
  const fs::path out = prepare_out(config);
  write_text(out / "grid.csv", grid_csv(result));
  int failed = 0;
  for (const auto& c : result.cells) failed += c.ok ? 0 : 1;
  if (result.best_run) {
    const auto& best = result.cells[*result.best];
    save_checkpoint(out / "checkpoint.bin", result.best_run->state);
    write_text(out / "history.csv", history_csv(result.best_run->history));
    write_text(out / "best_config.json", train_config_json(best.config).dump(2) + "\n");
  }
  write_stamp("grid", config, data_inputs(config));
  if (failed > 0) {
    std::cerr << fmt::format("warning: {} of {} grid cells failed\n", failed, result.cells.size());
  }
  return result.best_run ? (failed > 0 ? 1 : 0) : 1;
}

int cmd_eval(const PipelineConfig& config) {
  const fs::path ckpt =
      config.checkpoint.empty() ? config.out_dir / "checkpoint.bin" : config.checkpoint;
  require_path(ckpt, "checkpoint");
  const auto state = load_checkpoint(ckpt);
  const auto data = prepare_data(config);
  const auto report = evaluate_run(state, data.split.test, data.haptics, eval_options(config));
  const fs::path out = prepare_out(config);
  write_text(out / "report.json", report_json(report));
  write_text(out / "report.txt", report_table(report));
  RetrievalAudit audit;
  evaluate_scope(state, data.split.test, data.haptics, std::nullopt, eval_options(config), &audit);
  write_text(out / "rankings.csv", rankings_csv(audit));
  auto inputs = data_inputs(config);
  inputs.push_back({"checkpoint", ckpt});
  write_stamp("eval", config, inputs);
  return 0;
}

int cmd_zeroshot(const PipelineConfig& config) {
  validate(config.train);
  const auto data = prepare_data(config);
  const auto init = initial_state(config, data.split);
  const fs::path out = prepare_out(config);
  std::map<Category, EncoderState> states;
  for (Category c : kAllCategories) {
    TrainConfig t = config.train;
    t.category_scope = scope_of(c);
    auto run = train(init, data.split, data.haptics, t);
    save_checkpoint(out / fmt::format("checkpoint_{}.bin", to_string(c)), run.state);
    states.emplace(c, std::move(run.state));
  }
  const auto grid = zero_shot_matrix(states, data.split.test, data.haptics, eval_options(config));
  write_text(out / "zeroshot.json", zero_shot_json(grid));
  write_text(out / "zeroshot.txt", zero_shot_table(grid));
  write_stamp("zeroshot", config, data_inputs(config));
  return 0;
}

}  // namespace hapcap
