// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace hapcap {

// Ranked-list metrics. `ranked` holds the relevance of each retrieved
// candidate in rank order (it may be shorter than k); `num_relevant` is the
// size of the full relevant set for the query.

/// |relevant in top k| / k
double precision_at_k(const std::vector<bool>& ranked, std::size_t num_relevant, int k);

/// |relevant in top k| / num_relevant, 0 when there is nothing to find.
double recall_at_k(const std::vector<bool>& ranked, std::size_t num_relevant, int k);

/// Sum of precision@r over relevant ranks r <= k, over min(num_relevant, k).
double average_precision_at_k(const std::vector<bool>& ranked,
                              std::size_t num_relevant, int k);

/// Binary-gain DCG@k with log2(r + 1) discounts over the ideal DCG@k.
double ndcg_at_k(const std::vector<bool>& ranked, std::size_t num_relevant, int k);

}  // namespace hapcap
