// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hapcap/error.hpp"

namespace hapcap {

namespace {

std::size_t cutoff(const std::vector<bool>& ranked, int k) {
  if (k < 1) throw InvalidInput("metric cutoff k must be >= 1");
  return std::min(ranked.size(), static_cast<std::size_t>(k));
}

std::size_t hits(const std::vector<bool>& ranked, int k) {
  const std::size_t n = cutoff(ranked, k);
  return static_cast<std::size_t>(std::count(ranked.begin(), ranked.begin() + n, true));
}

}  // namespace

double precision_at_k(const std::vector<bool>& ranked, std::size_t, int k) {
  return static_cast<double>(hits(ranked, k)) / k;
}

double recall_at_k(const std::vector<bool>& ranked, std::size_t num_relevant, int k) {
  const std::size_t h = hits(ranked, k);
  if (num_relevant == 0) return 0.0;
  return static_cast<double>(h) / static_cast<double>(num_relevant);
}

double average_precision_at_k(const std::vector<bool>& ranked,
                              std::size_t num_relevant, int k) {
  const std::size_t n = cutoff(ranked, k);
  if (num_relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!ranked[r]) continue;
    ++found;
    sum += static_cast<double>(found) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(std::min(num_relevant, static_cast<std::size_t>(k)));
}

double ndcg_at_k(const std::vector<bool>& ranked, std::size_t num_relevant, int k) {
  const std::size_t n = cutoff(ranked, k);
  if (num_relevant == 0) return 0.0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (ranked[r]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  const std::size_t ideal_hits = std::min(num_relevant, static_cast<std::size_t>(k));
  double ideal = 0.0;
  for (std::size_t r = 0; r < ideal_hits; ++r) {
    ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / ideal;
}

}  // namespace hapcap
