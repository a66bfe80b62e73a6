// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "hapcap/error.hpp"
#include "hapcap/metrics.hpp"

namespace hapcap {

using json = nlohmann::json;

HapticInputs compute_haptic_inputs(std::span<const VibrationSignal> signals,
                                   const SpectrogramOptions& options) {
  HapticInputs out;
  for (const auto& s : signals) out[s.id] = haptic_input(s, options);
  return out;
}

RetrievalIndex build_index(const EncoderState& state,
                           std::span<const HapticTextPair> pairs,
                           std::optional<Category> scope) {
  RetrievalIndex index;
  index.scope = scope;
  for (const auto& p : pairs) {
    if (scope && p.label.category != *scope) continue;
    index.embeddings.push_back(
        project(state, encode_text(state, p.caption.text), Modality::kText).values);
    index.labels.push_back(p.label);
  }
  return index;
}

std::vector<double> similarity_scores(const Eigen::VectorXd& query,
                                      const RetrievalIndex& index, double kappa) {
  if (index.embeddings.empty()) throw InvalidInput("retrieval index is empty");
  std::vector<double> logits(index.embeddings.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (index.embeddings[i].size() != query.size()) {
      throw InvalidInput("query and candidate dimensions differ");
    }
    logits[i] = kappa * query.dot(index.embeddings[i]);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

RankedList retrieve_top_k(const Eigen::VectorXd& query, const RetrievalIndex& index,
                          int k, double kappa, std::string query_signal_id) {
  if (k < 1) throw InvalidInput("top-k cutoff must be >= 1");
  const auto scores = similarity_scores(query, index, kappa);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(k));
  std::partial_sort(order.begin(), order.begin() + n, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  RankedList out;
  out.query_signal_id = std::move(query_signal_id);
  out.short_list = static_cast<std::size_t>(k) > scores.size();
  for (std::size_t r = 0; r < n; ++r) out.entries.push_back({order[r], scores[order[r]]});
  return out;
}

std::vector<bool> relevance(const RankedList& ranked, const RetrievalIndex& index) {
  std::vector<bool> rel;
  rel.reserve(ranked.entries.size());
  for (const auto& e : ranked.entries) {
    rel.push_back(index.labels.at(e.candidate).signal_id == ranked.query_signal_id);
  }
  return rel;
}

std::size_t count_relevant(const RetrievalIndex& index, const std::string& signal_id) {
  return static_cast<std::size_t>(
      std::count_if(index.labels.begin(), index.labels.end(),
                    [&](const PairLabel& l) { return l.signal_id == signal_id; }));
}

const MetricRow& MetricsReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw InvalidInput("report has no row '" + name + "'");
}

MetricRow evaluate_scope(const EncoderState& state,
                         std::span<const HapticTextPair> pairs,
                         const HapticInputs& haptics,
                         std::optional<Category> scope, const EvalOptions& options,
                         RetrievalAudit* audit) {
  MetricRow row;
  row.name = scope ? to_string(*scope) : "combined";
  RetrievalIndex index = build_index(state, pairs, scope);
  std::set<std::string> queries;
  for (const auto& l : index.labels) queries.insert(l.signal_id);

  for (const auto& id : queries) {
    const auto it = haptics.find(id);
    if (it == haptics.end()) throw InvalidInput("no haptic input for signal '" + id + "'");
    const auto query =
        project(state, encode_haptic_input(state, it->second), Modality::kHaptic).values;
    auto ranked = retrieve_top_k(query, index, options.k, options.kappa, id);
    const auto rel = relevance(ranked, index);
    QueryMetrics qm;
    qm.signal_id = id;
    qm.relevant = count_relevant(index, id);
    qm.precision = precision_at_k(rel, qm.relevant, options.k);
    qm.recall = recall_at_k(rel, qm.relevant, options.k);
    qm.average_precision = average_precision_at_k(rel, qm.relevant, options.k);
    qm.ndcg = ndcg_at_k(rel, qm.relevant, options.k);
    row.precision += qm.precision;
    row.recall += qm.recall;
    row.map += qm.average_precision;
    row.ndcg += qm.ndcg;
    row.per_query.push_back(std::move(qm));
    if (audit) audit->rankings.push_back(std::move(ranked));
  }
  row.queries = row.per_query.size();
  if (row.queries > 0) {
    const double n = static_cast<double>(row.queries);
    row.precision /= n;
    row.recall /= n;
    row.map /= n;
    row.ndcg /= n;
  }
  if (audit) audit->index = std::move(index);
  return row;
}

MetricsReport evaluate_run(const EncoderState& state,
                           std::span<const HapticTextPair> test_pairs,
                           const HapticInputs& haptics, const EvalOptions& options) {
  if (test_pairs.empty()) throw InvalidInput("cannot evaluate on an empty test set");
  MetricsReport report;
  report.k = options.k;
  report.kappa = options.kappa;
  report.rows.push_back(evaluate_scope(state, test_pairs, haptics, std::nullopt, options));
  for (Category c : kAllCategories) {
    report.rows.push_back(evaluate_scope(state, test_pairs, haptics, c, options));
  }
  return report;
}

ZeroShotGrid zero_shot_matrix(const std::map<Category, EncoderState>& states,
                              std::span<const HapticTextPair> test_pairs,
                              const HapticInputs& haptics, const EvalOptions& options) {
  if (test_pairs.empty()) throw InvalidInput("cannot evaluate on an empty test set");
  for (Category c : kAllCategories) {
    if (!states.contains(c)) {
      throw InvalidInput(std::string("zero-shot grid is missing the ") + to_string(c) +
                         " model");
    }
  }
  ZeroShotGrid grid;
  grid.k = options.k;
  grid.kappa = options.kappa;
  for (Category train : kAllCategories) {
    for (Category test : kAllCategories) {
      grid.cells[static_cast<int>(train)][static_cast<int>(test)] =
          evaluate_scope(states.at(train), test_pairs, haptics, test, options);
    }
  }
  return grid;
}

namespace {

json row_json(const MetricRow& r) {
  return {{"name", r.name},      {"queries", r.queries},
          {"precision", r.precision}, {"recall", r.recall},
          {"map", r.map},        {"ndcg", r.ndcg}};
}

std::string row_cells(const MetricRow& r) {
  return fmt::format("{:>8.2f} {:>8.2f} {:>8.2f} {:>9.4f} {:>8}", 100 * r.precision,
                     100 * r.recall, 100 * r.map, r.ndcg, r.queries);
}

}  // namespace

std::string report_json(const MetricsReport& report) {
  json j;
  j["k"] = report.k;
  j["kappa"] = report.kappa;
  j["rows"] = json::array();
  for (const auto& r : report.rows) j["rows"].push_back(row_json(r));
  return j.dump(2) + "\n";
}

std::string report_table(const MetricsReport& report) {
  const int k = report.k;
  std::string out = fmt::format("{:<12} {:>8} {:>8} {:>8} {:>9} {:>8}\n", "scope",
                                fmt::format("P@{}", k), fmt::format("R@{}", k),
                                fmt::format("mAP@{}", k), fmt::format("nDCG@{}", k),
                                "queries");
  for (const auto& r : report.rows) {
    out += fmt::format("{:<12} {}\n", r.name, row_cells(r));
  }
  return out;
}

std::string zero_shot_json(const ZeroShotGrid& grid) {
  json j;
  j["k"] = grid.k;
  j["kappa"] = grid.kappa;
  j["cells"] = json::array();
  for (Category train : kAllCategories) {
    for (Category test : kAllCategories) {
      auto cell = row_json(grid.cells[static_cast<int>(train)][static_cast<int>(test)]);
      cell["train"] = to_string(train);
      cell["test"] = to_string(test);
      j["cells"].push_back(cell);
    }
  }
  return j.dump(2) + "\n";
}

std::string zero_shot_table(const ZeroShotGrid& grid) {
  const int k = grid.k;
  std::string out = fmt::format("{:<12} {:<12} {:>8} {:>8} {:>8} {:>9} {:>8}\n", "train",
                                "test", fmt::format("P@{}", k), fmt::format("R@{}", k),
                                fmt::format("mAP@{}", k), fmt::format("nDCG@{}", k),
                                "queries");
  for (Category train : kAllCategories) {
    for (Category test : kAllCategories) {
      out += fmt::format("{:<12} {:<12} {}\n", to_string(train), to_string(test),
                         row_cells(grid.cells[static_cast<int>(train)][static_cast<int>(test)]));
    }
  }
  return out;
}

std::string rankings_csv(const RetrievalAudit& audit) {
  std::string out = "query,rank,candidate,signal_id,category,score,relevant\n";
  for (const auto& list : audit.rankings) {
    for (std::size_t r = 0; r < list.entries.size(); ++r) {
      const auto& e = list.entries[r];
      const auto& label = audit.index.labels.at(e.candidate);
      out += fmt::format("{},{},{},{},{},{},{}\n", list.query_signal_id, r + 1,
                         e.candidate, label.signal_id, to_string(label.category),
                         e.score, label.signal_id == list.query_signal_id ? 1 : 0);
    }
  }
  return out;
}

}  // namespace hapcap
