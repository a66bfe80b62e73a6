// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapcap/dataset.hpp"
#include "hapcap/encoders.hpp"

namespace hapcap {

/// Haptic encoder inputs keyed by signal id.
using HapticInputs = std::map<std::string, Eigen::VectorXd>;

HapticInputs compute_haptic_inputs(std::span<const VibrationSignal> signals,
                                   const SpectrogramOptions& options = {});

/// Projected, unit-norm caption embeddings. `scope` empty means candidates
/// of every category.
struct RetrievalIndex {
  std::vector<Eigen::VectorXd> embeddings;
  std::vector<PairLabel> labels;
  std::optional<Category> scope;
};

RetrievalIndex build_index(const EncoderState& state,
                           std::span<const HapticTextPair> pairs,
                           std::optional<Category> scope = std::nullopt);

/// softmax over candidates of kappa * <query, candidate>.
std::vector<double> similarity_scores(const Eigen::VectorXd& query,
                                      const RetrievalIndex& index, double kappa);

struct RankedEntry {
  std::size_t candidate;  // position in the index; ties rank lower ids first
  double score;
};

struct RankedList {
  std::string query_signal_id;
  std::vector<RankedEntry> entries;
  bool short_list = false;  // k exceeded the index size
};

RankedList retrieve_top_k(const Eigen::VectorXd& query, const RetrievalIndex& index,
                          int k, double kappa = 100.0,
                          std::string query_signal_id = {});

/// Relevance flags of `ranked` for its query signal, plus the size of the
/// full relevant set in `index`.
std::vector<bool> relevance(const RankedList& ranked, const RetrievalIndex& index);
std::size_t count_relevant(const RetrievalIndex& index, const std::string& signal_id);

struct QueryMetrics {
  std::string signal_id;
  std::size_t relevant = 0;
  double precision = 0.0;
  double recall = 0.0;
  double average_precision = 0.0;
  double ndcg = 0.0;
};

struct MetricRow {
  std::string name;  // "combined" or a category
  double precision = 0.0;
  double recall = 0.0;
  double map = 0.0;
  double ndcg = 0.0;
  std::size_t queries = 0;
  std::vector<QueryMetrics> per_query;
};

struct MetricsReport {
  int k = 10;
  double kappa = 100.0;
  std::vector<MetricRow> rows;  // combined, sensory, emotional, associative

  const MetricRow& row(const std::string& name) const;
};

struct EvalOptions {
  int k = 10;
  double kappa = 100.0;
};

/// Index and per-query rankings behind one evaluated scope.
struct RetrievalAudit {
  RetrievalIndex index;
  std::vector<RankedList> rankings;
};

/// Queries are the distinct signals with a caption in scope; candidates are
/// the in-scope captions of `pairs`.
MetricRow evaluate_scope(const EncoderState& state,
                         std::span<const HapticTextPair> pairs,
                         const HapticInputs& haptics,
                         std::optional<Category> scope, const EvalOptions& options,
                         RetrievalAudit* audit = nullptr);

/// Combined row (all categories are candidates) then one row per category.
MetricsReport evaluate_run(const EncoderState& state,
                           std::span<const HapticTextPair> test_pairs,
                           const HapticInputs& haptics, const EvalOptions& options);

/// cells[train][test], indexed by Category.
struct ZeroShotGrid {
  int k = 10;
  double kappa = 100.0;
  std::array<std::array<MetricRow, 3>, 3> cells;
};

ZeroShotGrid zero_shot_matrix(const std::map<Category, EncoderState>& states,
                              std::span<const HapticTextPair> test_pairs,
                              const HapticInputs& haptics, const EvalOptions& options);

std::string report_json(const MetricsReport& report);
std::string report_table(const MetricsReport& report);
std::string zero_shot_json(const ZeroShotGrid& grid);
std::string zero_shot_table(const ZeroShotGrid& grid);
/// query,rank,candidate,signal_id,category,score,relevant
std::string rankings_csv(const RetrievalAudit& audit);

}  // namespace hapcap
