// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "hapcap/error.hpp"
#include "hapcap/hashing.hpp"
#include "hapcap/pipeline.hpp"
#include "hapcap/signal_io.hpp"
#include "test_util.hpp"

namespace hapcap {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::spit;
using testing::temp_dir;

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, EntriesAndFile) {
  PipelineConfig c;
  apply_config_entry(c, "alpha", "1e-4");
  apply_config_entry(c, "tau", "0.07");
  apply_config_entry(c, "n", "2");
  apply_config_entry(c, "category", "emotional");
  apply_config_entry(c, "grid_n", "1,2");
  apply_config_entry(c, "d", "32");
  EXPECT_EQ(c.train.alpha, 1e-4);
  EXPECT_EQ(c.train.tau, 0.07);
  EXPECT_EQ(c.train.n, 2);
  EXPECT_EQ(c.train.category_scope, CategoryScope::kEmotional);
  EXPECT_EQ(c.grid.ns, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.dims.d, 32);
  EXPECT_THROW(apply_config_entry(c, "no_such_key", "1"), InvalidInput);
  EXPECT_THROW(apply_config_entry(c, "epochs", "many"), InvalidInput);

  const auto dir = temp_dir("config");
  spit(dir / "run.cfg", "# comment\n\nseed = 9\nepochs=4\n");
  load_config_file(dir / "run.cfg", c);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.train.epochs, 4);
  spit(dir / "bad.cfg", "seed=1\nbogus=2\n");
  try {
    load_config_file(dir / "bad.cfg", c);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
}

std::uint64_t synth_seed(const fs::path& out) {
  return nlohmann::json::parse(slurp(out / "synthetic.json"))["seed"].get<std::uint64_t>();
}

TEST(Cli, SeedPrecedence) {
  const auto dir = temp_dir("cli_seed");
  spit(dir / "seed.cfg", "seed=5\n");
  const std::string cli = HAPCAP_CLI;
  const std::string common =
      " synth --classes 2 --signals-per-class 3 --participants 2 --sample-rate 1200 --out ";
  auto run = [&](const std::string& env, const std::string& extra, const fs::path& out) {
    const std::string cmd = env + " " + cli + common + out.string() + extra + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  ASSERT_EQ(run("HAPCAP_SEED=7", "", dir / "env"), 0);
  EXPECT_EQ(synth_seed(dir / "env"), 7u);
  ASSERT_EQ(run("HAPCAP_SEED=7", " --config " + (dir / "seed.cfg").string(), dir / "cfg"), 0);
  EXPECT_EQ(synth_seed(dir / "cfg"), 5u);
  ASSERT_EQ(run("HAPCAP_SEED=7", " --config " + (dir / "seed.cfg").string() + " --seed 3",
                dir / "flag"),
            0);
  EXPECT_EQ(synth_seed(dir / "flag"), 3u);
  ASSERT_EQ(run("env -u HAPCAP_SEED", "", dir / "none"), 0);
  EXPECT_EQ(synth_seed(dir / "none"), 0u);
  EXPECT_NE(run("", " --epochs 0 --config " + (dir / "missing.cfg").string(), dir / "x"), 0);
}

PipelineConfig small_config(const fs::path& root) {
  PipelineConfig c;
  c.signals_dir = root / "corpus" / "signals";
  c.captions = root / "corpus" / "captions.jsonl";
  c.out_dir = root / "out";
  c.dims.embed_dim = 8;
  c.dims.text_hidden = c.dims.haptic_hidden = 16;
  c.dims.d1 = c.dims.d2 = c.dims.d = 8;
  c.train.epochs = 2;
  c.train.batch_size = 16;
  c.train.seed = 4;
  return c;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.classes = 3;
  s.signals_per_class = 6;
  s.participants = 2;
  s.sample_rate = 1200;
  s.duration_s = 2.0;
  s.seed = 4;
  return s;
}

void make_corpus(const fs::path& root) {
  PipelineConfig c;
  c.out_dir = root / "corpus";
  ASSERT_EQ(cmd_synth(c, small_spec()), 0);
}

TEST(Stamp, HashTracksInputs) {
  const auto dir = temp_dir("stamp");
  spit(dir / "a.txt", "one");
  fs::create_directories(dir / "sig");
  spit(dir / "sig" / "x.csv", "0.1\n");
  PipelineConfig c;
  const std::vector<StampInput> inputs = {{"captions", dir / "a.txt"}, {"signals", dir / "sig"}};
  const auto h = [&] {
    return nlohmann::json::parse(make_stamp("train", c, inputs))["inputs_sha256"]
        .get<std::string>();
  };
  const auto first = h();
  EXPECT_EQ(h(), first);
  spit(dir / "a.txt", "two");
  const auto second = h();
  EXPECT_NE(second, first);
  spit(dir / "sig" / "x.csv", "0.2\n");
  EXPECT_NE(h(), second);
  spit(dir / "sig" / "x.csv", "0.1\n");
  spit(dir / "a.txt", "one");
  EXPECT_EQ(h(), first);
  const auto j = nlohmann::json::parse(make_stamp("train", c, inputs));
  EXPECT_EQ(j["inputs"].size(), 2u);
  EXPECT_EQ(j["command"], "train");
}

TEST(Augment, WritesVariantsAndManifest) {
  const auto root = temp_dir("augment");
  make_corpus(root);
  auto c = small_config(root);
  ASSERT_EQ(cmd_augment(c), 0);
  const auto manifest = nlohmann::json::parse(slurp(c.out_dir / "manifest.json"));
  EXPECT_EQ(manifest["inputs"], 18);
  EXPECT_EQ(manifest["total"], 18 * 9);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(c.out_dir / "signals")) files += e.is_regular_file();
  EXPECT_EQ(files, 18u * 9u);
  for (const auto& s : manifest["signals"]) {
    EXPECT_NEAR(s["duration_s"].get<double>(), 10.0, 1e-9);
    if (s["origin"] == "augmented") {
      EXPECT_EQ(s["parents"].size(), s["op"].get<std::string>().rfind("mix", 0) == 0 ? 2u : 1u);
    }
  }
  const auto first = slurp(c.out_dir / "manifest.json");
  const auto wav = slurp(c.out_dir / "signals" / "C0_00_stretch0.8.wav");
  ASSERT_EQ(cmd_augment(c), 0);
  EXPECT_EQ(slurp(c.out_dir / "manifest.json"), first);
  EXPECT_FALSE(wav.empty());

  spit(c.signals_dir / "broken.csv", "not,a,number\n");
  c.out_dir = root / "out2";
  EXPECT_EQ(cmd_augment(c), 1);
  const auto m2 = nlohmann::json::parse(slurp(c.out_dir / "manifest.json"));
  EXPECT_EQ(m2["failures"].size(), 1u);
  EXPECT_EQ(m2["total"], 18 * 9);

  c.signals_dir = root / "empty";
  fs::create_directories(c.signals_dir);
  c.out_dir = root / "out3";
  EXPECT_EQ(cmd_augment(c), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(c.out_dir / "manifest.json"))["total"], 0);
}

TEST(Filter, ThresholdExtremes) {
  const auto root = temp_dir("filter");
  make_corpus(root);
  auto c = small_config(root);
  c.threshold = 0.0;
  ASSERT_EQ(cmd_filter(c), 0);
  auto report = nlohmann::json::parse(slurp(c.out_dir / "filter_report.json"));
  EXPECT_EQ(report["total"]["removed"], 0);
  EXPECT_EQ(report["total"]["total"], 18 * 3 * 2);

  c.threshold = 1.01;
  ASSERT_EQ(cmd_filter(c), 0);
  report = nlohmann::json::parse(slurp(c.out_dir / "filter_report.json"));
  EXPECT_EQ(report["total"]["kept"], report["total"]["unscored"]);
  int sum = 0;
  for (const auto& [name, cat] : report["categories"].items()) {
    sum += cat["total"].get<int>();
    EXPECT_EQ(cat["total"].get<int>(), cat["kept"].get<int>() + cat["removed"].get<int>());
  }
  EXPECT_EQ(sum, report["total"]["total"].get<int>());
  const auto kept = load_captions(c.out_dir / "kept.jsonl").records;
  const auto removed = load_captions(c.out_dir / "removed.jsonl").records;
  EXPECT_EQ(kept.size() + removed.size(), 18u * 3u * 2u);
}

TEST(Stats, DiversityCsvShape) {
  const auto root = temp_dir("stats");
  make_corpus(root);
  const auto c = small_config(root);
  ASSERT_EQ(cmd_stats(c), 0);
  const auto csv = slurp(c.out_dir / "diversity.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("sensory"), std::string::npos);
  EXPECT_NE(csv.find("associative"), std::string::npos);
}

TEST(Features, TableAndSpectrograms) {
  const auto root = temp_dir("features");
  make_corpus(root);
  const auto c = small_config(root);
  ASSERT_EQ(cmd_features(c, true), 0);
  const auto csv = slurp(c.out_dir / "features.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 19);
  EXPECT_TRUE(fs::exists(c.out_dir / "spectrograms" / "C0_00.csv"));
}

TEST(TrainEval, EndToEnd) {
  const auto root = temp_dir("train_eval");
  make_corpus(root);
  const auto c = small_config(root);
  ASSERT_EQ(cmd_train(c), 0);
  EXPECT_TRUE(fs::exists(c.out_dir / "checkpoint.bin"));
  const auto history = slurp(c.out_dir / "history.csv");
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 3);
  ASSERT_EQ(cmd_eval(c), 0);
  const auto report = nlohmann::json::parse(slurp(c.out_dir / "report.json"));
  EXPECT_EQ(report["rows"].size(), 4u);
  const auto stamp = nlohmann::json::parse(slurp(c.out_dir / "stamp.json"));
  EXPECT_EQ(stamp["command"], "eval");
  EXPECT_EQ(stamp["inputs"].size(), 18u + 2u);

  auto missing = c;
  missing.checkpoint = root / "nope.bin";
  EXPECT_THROW(cmd_eval(missing), IoError);
}

}  // namespace
}  // namespace hapcap
