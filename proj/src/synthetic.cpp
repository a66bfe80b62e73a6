// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <fmt/format.h>

#include "hapcap/error.hpp"
#include "hapcap/random.hpp"

namespace hapcap {

namespace {

constexpr std::array<const char*, 8> kSensoryWords = {
    "buzzing", "humming", "rumbling", "tingling",
    "ticking", "purring", "droning", "whirring"};
constexpr std::array<const char*, 8> kEmotionalWords = {
    "calm", "tense", "joyful", "anxious", "playful", "gloomy", "eager", "sleepy"};
constexpr std::array<const char*, 8> kAssociativeWords = {
    "bee", "engine", "heartbeat", "rain", "clock", "cat", "drill", "motor"};
constexpr std::array<const char*, 3> kLevelWords = {"faint", "moderate", "strong"};
constexpr std::array<const char*, 2> kTempoWords = {"slow", "quick"};
constexpr std::array<double, 3> kLevels = {0.25, 0.5, 0.9};
constexpr std::array<double, 2> kTempo = {1.0, 2.5};
constexpr std::array<double, 8> kCarrierHz = {50, 80, 120, 170, 230, 300, 380, 470};
constexpr std::array<double, 8> kEnvelopeHz = {1.0, 1.5, 0.8, 2.0, 1.2, 0.6, 1.8, 0.9};

const char* category_word(Category c, int cls) {
  switch (c) {
    case Category::kSensory: return kSensoryWords[cls];
    case Category::kEmotional: return kEmotionalWords[cls];
    case Category::kAssociative: return kAssociativeWords[cls];
  }
  return "";
}

std::string caption_text(Category c, int cls, int level, int tempo, int participant,
                         double overlap, std::mt19937_64& rng) {
  const std::string word = category_word(c, cls);
  const std::string lvl = kLevelWords[level];
  const std::string tmp = kTempoWords[tempo];
  std::string text;
  switch (c) {
    case Category::kSensory:
      text = participant % 2 == 0 ? fmt::format("a {} {} vibration with {} pulses", lvl, word, tmp)
                                  : fmt::format("{} and {} {} pulses", word, lvl, tmp);
      break;
    case Category::kEmotional:
      text = participant % 2 == 0 ? fmt::format("feels {} in a {} {} way", word, lvl, tmp)
                                  : fmt::format("a {} {} feeling that is {}", tmp, word, lvl);
      break;
    case Category::kAssociative:
      text = participant % 2 == 0 ? fmt::format("like a {} {} {}", lvl, tmp, word)
                                  : fmt::format("reminds me of a {} {} that is {}", word, tmp, lvl);
      break;
  }
  std::bernoulli_distribution borrow(overlap);
  if (borrow(rng)) {
    std::uniform_int_distribution<int> pick(0, 1);
    const Category other = kAllCategories[(static_cast<int>(c) + 1 + pick(rng)) % 3];
    text += fmt::format(" {}", category_word(other, cls));
  }
  return text;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.classes > static_cast<int>(kCarrierHz.size())) {
    throw InvalidInput(fmt::format("classes must be in [1, {}], got {}",
                                   kCarrierHz.size(), spec.classes));
  }
  if (spec.signals_per_class < 1) throw InvalidInput("signals_per_class must be >= 1");
  if (spec.participants < 1) throw InvalidInput("participants must be >= 1");
  if (spec.sample_rate < 2 * 600) throw InvalidInput("sample_rate must be >= 1200");
  if (!(spec.duration_s > 0.0)) throw InvalidInput("duration_s must be positive");
  if (spec.overlap < 0.0 || spec.overlap > 1.0) throw InvalidInput("overlap must be in [0, 1]");

  SyntheticCorpus corpus;
  const std::size_t n = target_length(spec.duration_s, spec.sample_rate);
  std::mt19937_64 text_rng(derive_seed(spec.seed, 1));
  for (int cls = 0; cls < spec.classes; ++cls) {
    for (int j = 0; j < spec.signals_per_class; ++j) {
      std::mt19937_64 rng(derive_seed(spec.seed, 100 + static_cast<std::uint64_t>(
                                                           cls * spec.signals_per_class + j)));
      std::uniform_real_distribution<double> jitter(0.95, 1.05);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::normal_distribution<double> noise(0.0, 0.01);
      const int level = j % 3;
      const int tempo = (j / 3) % 2;
      const double amp = kLevels[level] * jitter(rng);
      const double carrier = kCarrierHz[cls] * jitter(rng);
      const double env = kEnvelopeHz[cls] * kTempo[tempo] * jitter(rng);
      const double p0 = phase(rng);
      const double p1 = phase(rng);

      VibrationSignal s;
      s.id = fmt::format("C{}_{:02d}", cls, j);
      s.sample_rate = spec.sample_rate;
      s.provenance.origin = SignalOrigin::kParametric;
      s.provenance.op_tag = fmt::format("synthetic:carrier={:.3f},envelope={:.3f},amp={:.3f}",
                                        carrier, env, amp);
      s.samples.resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        const double time = static_cast<double>(t) / spec.sample_rate;
        const double e = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * env * time + p1);
        const double v =
            amp * e * std::sin(2.0 * std::numbers::pi * carrier * time + p0) + noise(rng);
        s.samples[t] = std::clamp(v, -1.0, 1.0);
      }
      corpus.signal_class[s.id] = cls;

      for (Category c : kAllCategories) {
        for (int p = 0; p < spec.participants; ++p) {
          CaptionRecord r;
          r.signal_id = s.id;
          r.participant_id = fmt::format("P{}", p + 1);
          r.category = c;
          r.text = caption_text(c, cls, level, tempo, p, spec.overlap, text_rng);
          corpus.captions.push_back(std::move(r));
        }
      }
      corpus.signals.push_back(std::move(s));
    }
  }
  return corpus;
}

std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec) {
  std::set<std::string> words;
  std::mt19937_64 rng(0);
  for (int cls = 0; cls < spec.classes; ++cls) {
    for (Category c : kAllCategories) {
      for (int level = 0; level < 3; ++level) {
        for (int tempo = 0; tempo < 2; ++tempo) {
          for (int p = 0; p < 2; ++p) {
            for (auto& tok : tokenize(caption_text(c, cls, level, tempo, p, 0.0, rng))) {
              words.insert(tok);
            }
          }
        }
      }
    }
  }
  return {words.begin(), words.end()};
}

}  // namespace hapcap
