// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hapcap/dataset.hpp"
#include "hapcap/encoders.hpp"
#include "hapcap/retrieval.hpp"

namespace hapcap {

enum class CategoryScope { kAll, kSensory, kEmotional, kAssociative };

const char* to_string(CategoryScope scope);
CategoryScope parse_category_scope(std::string_view text);
std::optional<Category> scope_category(CategoryScope scope);
CategoryScope scope_of(Category c);

/// How a haptic-text pair enters the contrastive batch.
///  kViews:  haptic and text embeddings are two separate items carrying the
///           pair's label (2B items of dimension d).
///  kConcat: one item per pair, the concatenation [haptic; text] (B items of
///           dimension 2d).
enum class PairRepresentation { kViews, kConcat };

const char* to_string(PairRepresentation rep);
PairRepresentation parse_pair_representation(std::string_view text);

struct TrainConfig {
  double alpha = 1e-3;  // learning rate
  double tau = 0.1;     // temperature
  int n = 3;            // trainable text layers
  int m = 2;            // trainable haptic layers
  int batch_size = 128;
  int epochs = 15;
  std::uint64_t seed = 0;
  double kappa = 100.0;
  int k = 10;
  CategoryScope category_scope = CategoryScope::kAll;
  PairRepresentation representation = PairRepresentation::kViews;
};

void validate(const TrainConfig& config);

struct PairEmbeddingBatch {
  std::vector<Eigen::VectorXd> z;
  std::vector<PairLabel> labels;
};

struct SupConValue {
  double loss = 0.0;
  std::size_t anchors = 0;  // anchors with at least one positive
};

/// Supervised contrastive loss: mean over anchors i with positives P(i) of
///   -1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p/tau) / sum_{a != i} exp(z_i.z_a/tau) ).
/// A batch without any positive pair yields 0 and a warning on stderr.
double supcon_loss(const PairEmbeddingBatch& batch, double tau);

/// Same loss over integer class ids; fills d loss / d z_i when `grad` is set.
SupConValue supcon_value(std::span<const Eigen::VectorXd> z,
                         std::span<const int> classes, double tau,
                         std::vector<Eigen::VectorXd>* grad = nullptr);

/// Inputs for one optimisation step.
struct TrainingBatch {
  std::vector<std::vector<std::size_t>> token_ids;
  std::vector<Eigen::VectorXd> haptic_inputs;
  std::vector<PairLabel> labels;

  std::size_t size() const { return labels.size(); }
};

TrainingBatch make_batch(const EncoderState& state,
                         std::span<const HapticTextPair> pairs,
                         std::span<const std::size_t> indices,
                         const HapticInputs& haptics);

/// Gradients for the trainable tensors only, in parameters() order.
struct GradientSet {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

  bool empty() const { return tensors.empty(); }
  std::size_t size() const { return tensors.size(); }
  const Eigen::MatrixXd* find(const std::string& name) const;
};

struct LossGradients {
  double loss = 0.0;
  GradientSet gradients;
};

/// Forward pass only.
double batch_loss(const EncoderState& state, const TrainingBatch& batch, double tau,
                  PairRepresentation rep = PairRepresentation::kViews);

/// Exact gradients of batch_loss with respect to every trainable tensor.
LossGradients loss_gradients(const EncoderState& state, const TrainingBatch& batch,
                             double tau,
                             PairRepresentation rep = PairRepresentation::kViews);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_metric = 0.0;  // validation P@K
};

struct TrainResult {
  EncoderState state;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_metric = 0.0;
};

/// Adam (0.9, 0.999, 1e-8) over label-aware mini-batches. The depth knobs
/// of the returned state come from config.n / config.m. Returns the
/// checkpoint with the best validation P@K (earliest on ties).
TrainResult train(const EncoderState& initial, const DatasetSplit& split,
                  const HapticInputs& haptics, const TrainConfig& config);

/// Restricts pairs to the configured category scope.
std::vector<HapticTextPair> in_scope(std::span<const HapticTextPair> pairs,
                                     CategoryScope scope);

/// epoch,loss,val_p_at_k
std::string history_csv(std::span<const EpochRecord> history);

struct GridSpec {
  std::vector<double> alphas = {1e-3, 1e-4, 1e-5};
  std::vector<double> taus = {0.07, 0.1};
  std::vector<int> ns = {1, 2, 3, 4, 5};
  std::vector<int> ms = {1, 2, 3, 4, 5};

  std::size_t size() const { return alphas.size() * taus.size() * ns.size() * ms.size(); }
};

struct GridCell {
  TrainConfig config;
  bool ok = false;
  std::string error;
  int best_epoch = 0;
  double val_metric = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::optional<std::size_t> best;  // index into cells
  std::optional<TrainResult> best_run;
};

/// Trains every cell from `initial` and ranks cells by validation P@K. A
/// failing cell is recorded and the search continues.
GridResult grid_search(const EncoderState& initial, const DatasetSplit& split,
                       const HapticInputs& haptics, const TrainConfig& base,
                       const GridSpec& grid);

/// alpha,tau,n,m,status,best_epoch,val_p_at_k,error
std::string grid_csv(const GridResult& result);

}  // namespace hapcap
