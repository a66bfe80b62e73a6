// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

// hapcap: command-line front end for the haptic caption retrieval pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hapcap/error.hpp"
#include "hapcap/pipeline.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> signals, captions, out, checkpoint;
  std::optional<double> alpha, tau, kappa, threshold;
  std::optional<int> k, batch_size, epochs, n, m;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> category, representation;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--signals", f.signals, "signal directory (.wav/.csv)");
  cmd->add_option("--captions", f.captions, "captions JSONL");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "encoder checkpoint");
  cmd->add_option("--alpha", f.alpha, "learning rate");
  cmd->add_option("--tau", f.tau, "temperature");
  cmd->add_option("--k", f.k, "retrieval cutoff K");
  cmd->add_option("--kappa", f.kappa, "similarity scale");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--seed", f.seed, "random seed (fallback: HAPCAP_SEED)");
  cmd->add_option("-n,--text-layers", f.n, "trainable text layers");
  cmd->add_option("-m,--haptic-layers", f.m, "trainable haptic layers");
  cmd->add_option("--category", f.category, "all|sensory|emotional|associative");
  cmd->add_option("--representation", f.representation, "views|concat");
  cmd->add_option("--threshold", f.threshold, "agreement threshold");
}

hapcap::PipelineConfig resolve(const Flags& f) {
  hapcap::PipelineConfig c;
  if (const char* env = std::getenv("HAPCAP_SEED"); env && *env) {
    hapcap::apply_config_entry(c, "seed", env);
  }
  if (f.config) hapcap::load_config_file(*f.config, c);
  if (f.signals) c.signals_dir = *f.signals;
  if (f.captions) c.captions = *f.captions;
  if (f.out) c.out_dir = *f.out;
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (f.alpha) c.train.alpha = *f.alpha;
  if (f.tau) c.train.tau = *f.tau;
  if (f.k) c.train.k = *f.k;
  if (f.kappa) c.train.kappa = *f.kappa;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.seed) c.train.seed = *f.seed;
  if (f.n) c.train.n = *f.n;
  if (f.m) c.train.m = *f.m;
  if (f.category) hapcap::apply_config_entry(c, "category", *f.category);
  if (f.representation) hapcap::apply_config_entry(c, "representation", *f.representation);
  if (f.threshold) c.threshold = *f.threshold;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic caption retrieval pipeline"};
  app.require_subcommand(1);
  Flags flags;

  auto* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus");
  hapcap::SyntheticSpec spec;
  synth->add_option("--classes", spec.classes, "signal classes");
  synth->add_option("--signals-per-class", spec.signals_per_class, "signals per class");
  synth->add_option("--participants", spec.participants, "captions per signal and category");
  synth->add_option("--sample-rate", spec.sample_rate, "sample rate in Hz");
  synth->add_option("--overlap", spec.overlap, "cross-category word borrowing probability");

  auto* augment = app.add_subcommand("augment", "normalize signals and write 8 variants each");
  auto* filter = app.add_subcommand("filter", "remove low-agreement captions");
  auto* features = app.add_subcommand("features", "export waveform feature table");
  bool spectrograms = false;
  features->add_flag("--spectrograms", spectrograms, "also write log-mel spectrogram CSVs");
  auto* stats = app.add_subcommand("stats", "caption diversity table");
  auto* train = app.add_subcommand("train", "train encoders with early stopping");
  auto* grid = app.add_subcommand("grid", "hyperparameter grid search");
  auto* eval = app.add_subcommand("eval", "retrieval metrics on the test split");
  auto* zeroshot = app.add_subcommand("zeroshot", "category transfer matrix");
  for (auto* cmd : {synth, augment, filter, features, stats, train, grid, eval, zeroshot}) {
    add_common(cmd, flags);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve(flags);
    if (synth->parsed()) {
      spec.seed = config.train.seed;
      return hapcap::cmd_synth(config, spec);
    }
    if (augment->parsed()) return hapcap::cmd_augment(config);
    if (filter->parsed()) return hapcap::cmd_filter(config);
    if (features->parsed()) return hapcap::cmd_features(config, spectrograms);
    if (stats->parsed()) return hapcap::cmd_stats(config);
    if (train->parsed()) return hapcap::cmd_train(config);
    if (grid->parsed()) return hapcap::cmd_grid(config);
    if (eval->parsed()) return hapcap::cmd_eval(config);
    if (zeroshot->parsed()) return hapcap::cmd_zeroshot(config);
  } catch (const hapcap::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
