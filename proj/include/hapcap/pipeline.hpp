// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hapcap/dataset.hpp"
#include "hapcap/encoders.hpp"
#include "hapcap/synthetic.hpp"
#include "hapcap/training.hpp"

namespace hapcap {

/// Inputs, outputs and settings shared by every command. The seed lives in
/// train.seed and feeds every stochastic stage.
struct PipelineConfig {
  std::filesystem::path signals_dir;
  std::filesystem::path captions;
  std::filesystem::path out_dir;
  std::filesystem::path checkpoint;
  TrainConfig train;
  EncoderDims dims;
  SplitFractions fractions;
  GridSpec grid;
  double threshold = 0.5;
};

/// Sets one field from a flat `key=value` entry. Unknown keys throw.
void apply_config_entry(PipelineConfig& config, std::string_view key,
                        std::string_view value);

/// Reads `key = value` lines; blank lines and lines starting with '#' are
/// skipped.
void load_config_file(const std::filesystem::path& path, PipelineConfig& config);

/// Settings as JSON, without paths.
std::string config_json(const PipelineConfig& config);

struct StampInput {
  std::string role;  // e.g. "signals", "captions"
  std::filesystem::path path;  // file or directory
};

/// Reproducibility stamp: command, config, seed, and SHA-256 of every input
/// file (directories are expanded, names are relative to the role).
std::string make_stamp(std::string_view command, const PipelineConfig& config,
                       std::span<const StampInput> inputs);
void write_stamp(std::string_view command, const PipelineConfig& config,
                 std::span<const StampInput> inputs);

/// Default caption embedder for agreement filtering: term counts over the
/// vocabulary of `captions`.
TextEmbedder bag_of_words_embedder(std::span<const CaptionRecord> captions);
/// Projected text embedding of a trained encoder.
TextEmbedder encoder_embedder(const EncoderState& state);

/// Per-category caption counts before and after filtering, with the signal
/// counts. JSON.
std::string filter_report_json(std::span<const CaptionRecord> captions,
                               std::span<const std::optional<double>> scores,
                               const FilterResult& result, double threshold);

// Commands. Each returns a process exit code, writes its artifacts and a
// stamp.json under config.out_dir, and throws on invalid input.
int cmd_synth(const PipelineConfig& config, const SyntheticSpec& spec);
int cmd_augment(const PipelineConfig& config);
int cmd_filter(const PipelineConfig& config);
int cmd_features(const PipelineConfig& config, bool spectrograms);
int cmd_stats(const PipelineConfig& config);
int cmd_train(const PipelineConfig& config);
int cmd_grid(const PipelineConfig& config);
int cmd_eval(const PipelineConfig& config);
int cmd_zeroshot(const PipelineConfig& config);

/// Captioned pairs, split and haptic inputs as the train and eval commands
/// build them from config.signals_dir and config.captions.
struct PreparedData {
  std::vector<HapticTextPair> pairs;
  DatasetSplit split;
  HapticInputs haptics;
};

PreparedData prepare_data(const PipelineConfig& config);

}  // namespace hapcap
