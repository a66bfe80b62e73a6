// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "hapcap/error.hpp"

namespace hapcap {

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kPadToken),
                                          std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken || tokens_[kUnk] != kUnkToken) {
    throw InvalidInput("vocabulary must start with <pad>, <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw InvalidInput("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::size_t Vocabulary::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& tok : tokenize(text)) ids.push_back(lookup(tok));
  if (ids.empty()) ids.push_back(kUnk);
  return ids;
}

Vocabulary build_vocab_from_texts(std::span<const std::string> texts,
                                  int min_count) {
  std::map<std::string, long> counts;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) ++counts[tok];
  }
  if (counts.empty()) throw InvalidInput("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already lexicographic
  });
  std::vector<std::string> tokens = {std::string(Vocabulary::kPadToken),
                                     std::string(Vocabulary::kUnkToken)};
  for (auto& [tok, n] : ranked) {
    if (n >= min_count && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) {
      tokens.push_back(tok);
    }
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const CaptionRecord> captions, int min_count) {
  std::vector<std::string> texts;
  texts.reserve(captions.size());
  for (const auto& c : captions) texts.push_back(c.text);
  return build_vocab_from_texts(texts, min_count);
}

namespace {

DenseLayer xavier_layer(int in, int out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer layer;
  layer.weight.resize(out, in);
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = dist(rng);
    }
  }
  layer.bias = Eigen::MatrixXd::Zero(out, 1);
  return layer;
}

std::vector<DenseLayer> make_tower(int input, int hidden, int depth, int output,
                                   std::mt19937_64& rng) {
  std::vector<DenseLayer> layers;
  int in = input;
  for (int l = 0; l < depth; ++l) {
    const int out = (l + 1 == depth) ? output : hidden;
    layers.push_back(xavier_layer(in, out, rng));
    in = out;
  }
  return layers;
}

void check_positive(int v, const char* what) {
  if (v <= 0) throw InvalidInput(fmt::format("{} must be positive, got {}", what, v));
}

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                 const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput(fmt::format("{} is {}x{}, expected {}x{}", name, m.rows(),
                                   m.cols(), rows, cols));
  }
}

void check_tower(const std::vector<DenseLayer>& layers, int input, int hidden,
                 int depth, int output, const std::string& name) {
  if (static_cast<int>(layers.size()) != depth) {
    throw InvalidInput(fmt::format("{} has {} layers, expected {}", name,
                                   layers.size(), depth));
  }
  int in = input;
  for (int l = 0; l < depth; ++l) {
    const int out = (l + 1 == depth) ? output : hidden;
    check_shape(layers[l].weight, out, in, fmt::format("{}.dense{}.weight", name, l));
    check_shape(layers[l].bias, out, 1, fmt::format("{}.dense{}.bias", name, l));
    in = out;
  }
}

Eigen::VectorXd l2_normalized(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm == 0.0) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    if (v.size() > 0) out(0) = 1.0;
    return out;
  }
  return v / norm;
}

}  // namespace

EncoderState init_encoder(const EncoderDims& dims, Vocabulary vocab,
                          std::uint64_t seed, int text_trainable,
                          int haptic_trainable) {
  check_positive(dims.embed_dim, "embed_dim");
  check_positive(dims.text_hidden, "text_hidden");
  check_positive(dims.text_depth, "text_depth");
  check_positive(dims.haptic_input, "haptic_input");
  check_positive(dims.haptic_hidden, "haptic_hidden");
  check_positive(dims.haptic_depth, "haptic_depth");
  check_positive(dims.d1, "d1");
  check_positive(dims.d2, "d2");
  check_positive(dims.d, "d");

  std::mt19937_64 rng(seed);
  EncoderState state;
  state.dims = dims;
  state.vocab = std::move(vocab);
  state.text_trainable = text_trainable;
  state.haptic_trainable = haptic_trainable;

  const double emb_limit = std::sqrt(3.0 / dims.embed_dim);
  std::uniform_real_distribution<double> emb(-emb_limit, emb_limit);
  state.token_embedding.resize(static_cast<Eigen::Index>(state.vocab.size()),
                               dims.embed_dim);
  for (Eigen::Index r = 0; r < state.token_embedding.rows(); ++r) {
    for (Eigen::Index c = 0; c < state.token_embedding.cols(); ++c) {
      state.token_embedding(r, c) = emb(rng);
    }
  }
  state.text_layers = make_tower(dims.embed_dim, dims.text_hidden, dims.text_depth,
                                 dims.d2, rng);
  state.haptic_layers = make_tower(dims.haptic_input, dims.haptic_hidden,
                                   dims.haptic_depth, dims.d1, rng);
  state.proj_text = xavier_layer(dims.d2, dims.d, rng).weight;
  state.proj_haptic = xavier_layer(dims.d1, dims.d, rng).weight;
  validate(state);
  return state;
}

void validate(const EncoderState& state) {
  const auto& d = state.dims;
  check_shape(state.token_embedding, static_cast<Eigen::Index>(state.vocab.size()),
              d.embed_dim, "text.embedding");
  check_tower(state.text_layers, d.embed_dim, d.text_hidden, d.text_depth, d.d2, "text");
  check_tower(state.haptic_layers, d.haptic_input, d.haptic_hidden, d.haptic_depth,
              d.d1, "haptic");
  check_shape(state.proj_text, d.d, d.d2, "text.proj");
  check_shape(state.proj_haptic, d.d, d.d1, "haptic.proj");
  if (state.text_trainable < 0 || state.text_trainable > d.text_depth) {
    throw InvalidInput(fmt::format("text trainable depth {} outside [0, {}]",
                                   state.text_trainable, d.text_depth));
  }
  if (state.haptic_trainable < 0 || state.haptic_trainable > d.haptic_depth) {
    throw InvalidInput(fmt::format("haptic trainable depth {} outside [0, {}]",
                                   state.haptic_trainable, d.haptic_depth));
  }
}

std::vector<NamedParameter> parameters(EncoderState& state) {
  std::vector<NamedParameter> out;
  out.push_back({"text.embedding", &state.token_embedding, false});
  auto add_tower = [&](std::vector<DenseLayer>& layers, int trainable,
                       const char* name) {
    const int depth = static_cast<int>(layers.size());
    for (int l = 0; l < depth; ++l) {
      const bool train = l >= depth - trainable;
      out.push_back({fmt::format("{}.dense{}.weight", name, l), &layers[l].weight, train});
      out.push_back({fmt::format("{}.dense{}.bias", name, l), &layers[l].bias, train});
    }
  };
  add_tower(state.text_layers, state.text_trainable, "text");
  out.push_back({"text.proj", &state.proj_text, state.text_trainable > 0});
  add_tower(state.haptic_layers, state.haptic_trainable, "haptic");
  out.push_back({"haptic.proj", &state.proj_haptic, state.haptic_trainable > 0});
  return out;
}

std::vector<ConstNamedParameter> parameters(const EncoderState& state) {
  std::vector<ConstNamedParameter> out;
  for (const auto& p : parameters(const_cast<EncoderState&>(state))) {
    out.push_back({p.name, p.value, p.trainable});
  }
  return out;
}

Eigen::VectorXd text_input(const EncoderState& state,
                           std::span<const std::size_t> token_ids) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(state.dims.embed_dim);
  if (token_ids.empty()) return state.token_embedding.row(Vocabulary::kUnk).transpose();
  for (std::size_t id : token_ids) {
    if (id >= state.vocab.size()) throw InvalidInput("token id out of range");
    sum += state.token_embedding.row(static_cast<Eigen::Index>(id)).transpose();
  }
  return sum / static_cast<double>(token_ids.size());
}

Eigen::VectorXd text_input(const EncoderState& state, std::string_view text) {
  const auto ids = state.vocab.encode(text);
  return text_input(state, ids);
}

Eigen::VectorXd haptic_input(const VibrationSignal& s,
                             const SpectrogramOptions& options) {
  const auto stats = pooled_band_stats(log_mel_spectrogram(s, options));
  const double unit = -std::log(kLogFloorEpsilon);
  Eigen::VectorXd x(static_cast<Eigen::Index>(stats.size()));
  const std::size_t bands = stats.size() / 2;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    x(static_cast<Eigen::Index>(i)) = i < bands ? (stats[i] + unit) / unit
                                                : stats[i] / unit;
  }
  return x;
}

Eigen::VectorXd run_tower(std::span<const DenseLayer> layers,
                          const Eigen::VectorXd& input) {
  Eigen::VectorXd h = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (h.size() != layers[l].weight.cols()) {
      throw InvalidInput(fmt::format("layer {} expects input {}, got {}", l,
                                     layers[l].weight.cols(), h.size()));
    }
    Eigen::VectorXd pre = layers[l].weight * h + layers[l].bias.col(0);
    h = (l + 1 == layers.size()) ? pre : Eigen::VectorXd(pre.cwiseMax(0.0));
  }
  return h;
}

Embedding encode_text(const EncoderState& state, std::string_view text) {
  return {run_tower(state.text_layers, text_input(state, text)), false};
}

Embedding encode_haptic_input(const EncoderState& state,
                              const Eigen::VectorXd& input) {
  return {run_tower(state.haptic_layers, input), false};
}

Embedding encode_haptic(const EncoderState& state, const VibrationSignal& s) {
  return encode_haptic_input(state, haptic_input(s));
}

Embedding project(const EncoderState& state, const Embedding& embedding,
                  Modality modality) {
  const Eigen::MatrixXd& proj =
      modality == Modality::kText ? state.proj_text : state.proj_haptic;
  if (embedding.values.size() != proj.cols()) {
    throw InvalidInput(fmt::format(
        "{} embedding has dimension {}, projection expects {}",
        modality == Modality::kText ? "text" : "haptic", embedding.values.size(),
        proj.cols()));
  }
  return {l2_normalized(proj * embedding.values), true};
}

}  // namespace hapcap
