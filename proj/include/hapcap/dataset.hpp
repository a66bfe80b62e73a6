// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hapcap {

enum class Category { kSensory = 0, kEmotional = 1, kAssociative = 2 };

inline constexpr std::array<Category, 3> kAllCategories = {
    Category::kSensory, Category::kEmotional, Category::kAssociative};

const char* to_string(Category c);
/// Case-insensitive; accepts the full names only.
Category parse_category(std::string_view text);

struct CaptionRecord {
  std::string signal_id;
  std::string participant_id;
  Category category = Category::kSensory;
  std::string text;

  bool operator==(const CaptionRecord&) const = default;
};

/// Class identity of a haptic-text pair: (signal id, category).
struct PairLabel {
  std::string signal_id;
  Category category = Category::kSensory;

  auto operator<=>(const PairLabel&) const = default;
  std::string str() const;  // e.g. "F1_sensory"
};

struct HapticTextPair {
  std::string signal_id;
  CaptionRecord caption;
  PairLabel label;
};

struct DatasetSplit {
  std::vector<HapticTextPair> train;
  std::vector<HapticTextPair> valid;
  std::vector<HapticTextPair> test;
};

/// Lowercased tokens split on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// True for captions ingestion drops: blank, "NA", "N/A", "Not Applicable".
bool is_not_applicable(std::string_view text);

struct CaptionLoad {
  std::vector<CaptionRecord> records;
  std::size_t dropped_na = 0;
  std::size_t dropped_empty = 0;
};

/// JSONL with keys signal_id, participant_id, category, text. Throws IoError
/// naming the line for malformed rows and unknown categories.
CaptionLoad load_captions(const std::filesystem::path& path);
void write_captions(const std::filesystem::path& path,
                    std::span<const CaptionRecord> captions);

/// One pair per caption. Throws InvalidInput listing captions whose signal id
/// is not in `signal_ids`.
std::vector<HapticTextPair> build_pairs(std::span<const CaptionRecord> captions,
                                        const std::set<std::string>& signal_ids);

using TextEmbedder = std::function<std::vector<double>(const std::string&)>;

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Mean cosine similarity of each caption to the captions of other
/// participants in its (signal, category) group. Captions with no such peer
/// are unscored (nullopt). Output is aligned with `captions`.
std::vector<std::optional<double>> agreement_scores(
    std::span<const CaptionRecord> captions, const TextEmbedder& embed);

struct FilterResult {
  std::vector<CaptionRecord> kept;
  std::vector<CaptionRecord> removed;
  std::size_t unscored = 0;
  std::set<std::string> retained_signals;
  std::set<std::string> dropped_signals;
};

/// Removes scored captions with score < threshold; unscored captions stay.
/// Signals left without any caption are reported in dropped_signals.
FilterResult filter_low_agreement(std::span<const CaptionRecord> captions,
                                  std::span<const std::optional<double>> scores,
                                  double threshold = 0.5);

struct SplitFractions {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;
};

/// Seeded partition stratified by category. Split sizes are the rounded
/// global targets; per-category quotas use largest remainders.
DatasetSplit split_dataset(std::span<const HapticTextPair> pairs,
                           std::uint64_t seed, SplitFractions fractions = {});

struct NgramStats {
  double distinct = 0.0;     // unique n-grams / total n-grams
  double mean_ngrams = 0.0;  // total n-grams / captions
  std::size_t total = 0;
  std::size_t unique = 0;
  bool degenerate = false;   // no caption had n tokens
};

NgramStats ngram_stats(std::span<const CaptionRecord> captions, int n);

/// Per-category distinct-n and mean n-gram counts for n = 1..3.
std::map<Category, std::array<NgramStats, 3>> diversity_stats(
    std::span<const CaptionRecord> captions);

/// CSV: category,distinct_1,ngram_1,distinct_2,ngram_2,distinct_3,ngram_3
std::string diversity_table_csv(std::span<const CaptionRecord> captions);

}  // namespace hapcap
