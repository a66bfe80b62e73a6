// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "hapcap/error.hpp"
#include "hapcap/random.hpp"

namespace hapcap {

using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string id_field(const json& row, const char* key) {
  const auto& v = row.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument(std::string(key) + " must be a string or integer");
}

}  // namespace

const char* to_string(Category c) {
  switch (c) {
    case Category::kSensory: return "sensory";
    case Category::kEmotional: return "emotional";
    case Category::kAssociative: return "associative";
  }
  return "sensory";
}

Category parse_category(std::string_view text) {
  const auto key = lower(trim(text));
  if (key == "sensory") return Category::kSensory;
  if (key == "emotional") return Category::kEmotional;
  if (key == "associative") return Category::kAssociative;
  throw InvalidInput("unknown category '" + std::string(text) + "'");
}

std::string PairLabel::str() const {
  return signal_id + "_" + to_string(category);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_not_applicable(std::string_view text) {
  const auto key = lower(trim(text));
  return key.empty() || key == "na" || key == "n/a" || key == "not applicable";
}

CaptionLoad load_captions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CaptionLoad out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    CaptionRecord rec;
    std::string category;
    try {
      const auto row = json::parse(line);
      rec.signal_id = id_field(row, "signal_id");
      rec.participant_id = id_field(row, "participant_id");
      category = row.at("category").get<std::string>();
      rec.text = row.at("text").get<std::string>();
    } catch (const std::exception& e) {
      throw IoError(fmt::format("{}:{}: malformed caption row: {}",
                                path.string(), line_no, e.what()));
    }
    try {
      rec.category = parse_category(category);
    } catch (const InvalidInput& e) {
      throw IoError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (trim(rec.text).empty()) {
      ++out.dropped_empty;
      continue;
    }
    if (is_not_applicable(rec.text)) {
      ++out.dropped_na;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_captions(const std::filesystem::path& path,
                    std::span<const CaptionRecord> captions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& c : captions) {
    json row = {{"signal_id", c.signal_id},
                {"participant_id", c.participant_id},
                {"category", to_string(c.category)},
                {"text", c.text}};
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<HapticTextPair> build_pairs(std::span<const CaptionRecord> captions,
                                        const std::set<std::string>& signal_ids) {
  std::set<std::string> missing;
  for (const auto& c : captions) {
    if (!signal_ids.contains(c.signal_id)) missing.insert(c.signal_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw InvalidInput("captions reference unknown signals: " + list);
  }
  std::vector<HapticTextPair> pairs;
  pairs.reserve(captions.size());
  for (const auto& c : captions) {
    pairs.push_back({c.signal_id, c, PairLabel{c.signal_id, c.category}});
  }
  return pairs;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine of mismatched dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::optional<double>> agreement_scores(
    std::span<const CaptionRecord> captions, const TextEmbedder& embed) {
  std::map<PairLabel, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    groups[{captions[i].signal_id, captions[i].category}].push_back(i);
  }
  std::vector<std::optional<double>> scores(captions.size());
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<std::vector<double>> vecs;
    vecs.reserve(members.size());
    for (std::size_t i : members) vecs.push_back(embed(captions[i].text));
    for (std::size_t a = 0; a < members.size(); ++a) {
      double sum = 0.0;
      std::size_t peers = 0;
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a == b) continue;
        if (captions[members[a]].participant_id ==
            captions[members[b]].participant_id) {
          continue;
        }
        sum += cosine_similarity(vecs[a], vecs[b]);
        ++peers;
      }
      if (peers > 0) scores[members[a]] = sum / static_cast<double>(peers);
    }
  }
  return scores;
}

FilterResult filter_low_agreement(std::span<const CaptionRecord> captions,
                                  std::span<const std::optional<double>> scores,
                                  double threshold) {
  if (scores.size() != captions.size()) {
    throw InvalidInput("agreement scores not aligned with captions");
  }
  FilterResult out;
  std::set<std::string> before;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    before.insert(captions[i].signal_id);
    if (!scores[i]) {
      ++out.unscored;
      out.kept.push_back(captions[i]);
    } else if (*scores[i] < threshold) {
      out.removed.push_back(captions[i]);
    } else {
      out.kept.push_back(captions[i]);
    }
  }
  for (const auto& c : out.kept) out.retained_signals.insert(c.signal_id);
  std::set_difference(before.begin(), before.end(), out.retained_signals.begin(),
                      out.retained_signals.end(),
                      std::inserter(out.dropped_signals, out.dropped_signals.end()));
  return out;
}

namespace {

/// Integer category x split counts with exact row (category size) and column
/// (split size) totals, each cell as close as possible to size * fraction.
std::array<std::array<std::size_t, 3>, 3> round_split_table(
    const std::array<std::size_t, 3>& sizes, const std::array<double, 3>& fractions,
    const std::array<std::size_t, 3>& totals) {
  using Table = std::array<std::array<long, 3>, 3>;
  std::array<std::array<double, 3>, 3> ideal{};
  Table base{};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t s = 0; s < 3; ++s) {
      ideal[c][s] = fractions[s] * static_cast<double>(sizes[c]);
      base[c][s] = static_cast<long>(std::floor(ideal[c][s]));
    }
  }
  Table best{};
  double best_max = std::numeric_limits<double>::infinity(), best_sq = best_max;
  // Cells of the first two splits range over floor-1 .. floor+2; the last
  // split takes the remainder of each category.
  for (int code = 0; code < 4096; ++code) {
    Table x{};
    bool ok = true;
    int rest = code;
    for (std::size_t c = 0; c < 3 && ok; ++c) {
      long used = 0;
      for (std::size_t s = 0; s < 2; ++s) {
        x[c][s] = base[c][s] + (rest % 4) - 1;
        rest /= 4;
        if (x[c][s] < 0) ok = false;
        used += x[c][s];
      }
      x[c][2] = static_cast<long>(sizes[c]) - used;
      if (x[c][2] < 0) ok = false;
    }
    for (std::size_t s = 0; s < 2 && ok; ++s) {
      if (x[0][s] + x[1][s] + x[2][s] != static_cast<long>(totals[s])) ok = false;
    }
    if (!ok) continue;
    double worst = 0.0, sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t s = 0; s < 3; ++s) {
        const double dev = std::abs(static_cast<double>(x[c][s]) - ideal[c][s]);
        worst = std::max(worst, dev);
        sq += dev * dev;
      }
    }
    if (worst < best_max - 1e-12 || (worst < best_max + 1e-12 && sq < best_sq - 1e-12)) {
      best = x;
      best_max = worst;
      best_sq = sq;
    }
  }
  if (!std::isfinite(best_max)) {
    throw InvalidInput("cannot stratify the split with the requested fractions");
  }
  std::array<std::array<std::size_t, 3>, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t s = 0; s < 3; ++s) out[c][s] = static_cast<std::size_t>(best[c][s]);
  }
  return out;
}

}  // namespace

DatasetSplit split_dataset(std::span<const HapticTextPair> pairs,
                           std::uint64_t seed, SplitFractions fractions) {
  const double total_fraction = fractions.train + fractions.valid + fractions.test;
  if (fractions.train < 0 || fractions.valid < 0 || fractions.test < 0 ||
      std::abs(total_fraction - 1.0) > 1e-9) {
    throw InvalidInput("split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = pairs.size();
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * n));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(fractions.valid * n)));
  const std::size_t n_test = n - n_train - n_valid;
  if ((fractions.train > 0 && n_train == 0) ||
      (fractions.valid > 0 && n_valid == 0) || (fractions.test > 0 && n_test == 0)) {
    throw InvalidInput(fmt::format(
        "{} pairs are too few to fill a {}/{}/{} split", n, fractions.train,
        fractions.valid, fractions.test));
  }

  std::array<std::vector<std::size_t>, 3> by_cat;
  for (std::size_t i = 0; i < n; ++i) {
    by_cat[static_cast<int>(pairs[i].label.category)].push_back(i);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    std::mt19937_64 rng(derive_seed(seed, c));
    std::shuffle(by_cat[c].begin(), by_cat[c].end(), rng);
  }

  const auto quota = round_split_table(
      {by_cat[0].size(), by_cat[1].size(), by_cat[2].size()},
      {fractions.train, fractions.valid, fractions.test}, {n_train, n_valid, n_test});
  std::array<std::size_t, 3> train_q{}, valid_q{};
  for (std::size_t c = 0; c < 3; ++c) {
    train_q[c] = quota[c][0];
    valid_q[c] = quota[c][1];
  }

  DatasetSplit split;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& idx = by_cat[c];
    std::size_t k = 0;
    for (; k < train_q[c]; ++k) split.train.push_back(pairs[idx[k]]);
    for (; k < train_q[c] + valid_q[c]; ++k) split.valid.push_back(pairs[idx[k]]);
    for (; k < idx.size(); ++k) split.test.push_back(pairs[idx[k]]);
  }
  return split;
}

NgramStats ngram_stats(std::span<const CaptionRecord> captions, int n) {
  if (n < 1) throw InvalidInput("n-gram order must be >= 1");
  NgramStats st;
  std::set<std::vector<std::string>> unique;
  for (const auto& c : captions) {
    const auto tokens = tokenize(c.text);
    if (tokens.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      unique.emplace(tokens.begin() + i, tokens.begin() + i + n);
      ++st.total;
    }
  }
  st.unique = unique.size();
  if (st.total == 0) {
    st.degenerate = true;
    return st;
  }
  st.distinct = static_cast<double>(st.unique) / static_cast<double>(st.total);
  st.mean_ngrams = static_cast<double>(st.total) / static_cast<double>(captions.size());
  return st;
}

std::map<Category, std::array<NgramStats, 3>> diversity_stats(
    std::span<const CaptionRecord> captions) {
  std::map<Category, std::array<NgramStats, 3>> out;
  for (Category cat : kAllCategories) {
    std::vector<CaptionRecord> subset;
    for (const auto& c : captions) {
      if (c.category == cat) subset.push_back(c);
    }
    auto& row = out[cat];
    for (int n = 1; n <= 3; ++n) {
      row[n - 1] = ngram_stats(subset, n);
      if (row[n - 1].degenerate && !subset.empty()) {
        std::cerr << fmt::format("warning: no {} caption has {} tokens; "
                                 "distinct-{} reported as 0\n",
                                 to_string(cat), n, n);
      }
    }
  }
  return out;
}

std::string diversity_table_csv(std::span<const CaptionRecord> captions) {
  std::string csv = "category,distinct_1,ngram_1,distinct_2,ngram_2,distinct_3,ngram_3\n";
  for (const auto& [cat, row] : diversity_stats(captions)) {
    csv += to_string(cat);
    for (const auto& st : row) {
      csv += fmt::format(",{:.4f},{:.4f}", st.distinct, st.mean_ngrams);
    }
    csv += '\n';
  }
  return csv;
}

}  // namespace hapcap
