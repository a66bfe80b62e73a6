// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hapcap/dataset.hpp"
#include "hapcap/features.hpp"
#include "hapcap/signal.hpp"

namespace hapcap {

/// Token to index map. Index 0 is <pad>, 1 is <unk>; the rest follow in
/// descending frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// `tokens` must start with the two specials.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t lookup(const std::string& token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Token ids of `text`; an empty tokenization yields {kUnk}.
  std::vector<std::size_t> encode(std::string_view text) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

Vocabulary build_vocab(std::span<const CaptionRecord> captions, int min_count = 1);
Vocabulary build_vocab_from_texts(std::span<const std::string> texts,
                                  int min_count = 1);

struct EncoderDims {
  int embed_dim = 64;
  int text_hidden = 128;
  int text_depth = 3;
  int haptic_input = 2 * kMelBands;
  int haptic_hidden = 128;
  int haptic_depth = 3;
  int d1 = 64;  // haptic encoder output
  int d2 = 64;  // text encoder output
  int d = 64;   // shared space

  bool operator==(const EncoderDims&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::MatrixXd bias;    // out x 1
};

enum class Modality { kText, kHaptic };

/// Parameters of both towers and their projections. Every dense layer but
/// the top one of each tower is followed by ReLU. `text_trainable` (n) and
/// `haptic_trainable` (m) select how many top dense layers train; a tower
/// with depth knob 0 is frozen entirely, including its projection. The token
/// embedding table is always frozen.
struct EncoderState {
  EncoderDims dims;
  Vocabulary vocab;
  Eigen::MatrixXd token_embedding;  // V x embed_dim
  std::vector<DenseLayer> text_layers;
  std::vector<DenseLayer> haptic_layers;
  Eigen::MatrixXd proj_text;    // d x d2
  Eigen::MatrixXd proj_haptic;  // d x d1
  int text_trainable = 3;
  int haptic_trainable = 2;
};

/// Xavier-uniform dense weights, zero biases, uniform token embeddings with
/// unit expected squared norm per row; all draws from one seeded generator.
EncoderState init_encoder(const EncoderDims& dims, Vocabulary vocab,
                          std::uint64_t seed, int text_trainable = 3,
                          int haptic_trainable = 2);

/// Throws InvalidInput if shapes disagree with dims or the depth knobs are
/// outside [0, depth].
void validate(const EncoderState& state);

struct NamedParameter {
  std::string name;
  Eigen::MatrixXd* value;
  bool trainable;
};

struct ConstNamedParameter {
  std::string name;
  const Eigen::MatrixXd* value;
  bool trainable;
};

/// All parameter tensors in canonical order.
std::vector<NamedParameter> parameters(EncoderState& state);
std::vector<ConstNamedParameter> parameters(const EncoderState& state);

struct Embedding {
  Eigen::VectorXd values;
  bool normalized = false;
};

/// Mean of the token embeddings of `text` (UNK for unknown or no tokens).
Eigen::VectorXd text_input(const EncoderState& state, std::string_view text);
Eigen::VectorXd text_input(const EncoderState& state,
                           std::span<const std::size_t> token_ids);

/// Pooled log-mel band statistics, affinely rescaled so a floor-only band
/// maps to 0 and one unit is |log(epsilon)|.
Eigen::VectorXd haptic_input(const VibrationSignal& s,
                             const SpectrogramOptions& options = {});

Eigen::VectorXd run_tower(std::span<const DenseLayer> layers,
                          const Eigen::VectorXd& input);

Embedding encode_text(const EncoderState& state, std::string_view text);
Embedding encode_haptic(const EncoderState& state, const VibrationSignal& s);
Embedding encode_haptic_input(const EncoderState& state,
                              const Eigen::VectorXd& input);

/// Linear map into the shared space followed by L2 normalization.
Embedding project(const EncoderState& state, const Embedding& embedding,
                  Modality modality);

/// Bit-exact binary checkpoint: magic, version, JSON header (dims, knobs,
/// vocabulary, tensor shapes), then raw little-endian float64 tensors.
std::string serialize_checkpoint(const EncoderState& state);
EncoderState deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const EncoderState& state);
EncoderState load_checkpoint(const std::filesystem::path& path);

}  // namespace hapcap
