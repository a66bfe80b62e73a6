// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hapcap/dataset.hpp"
#include "hapcap/signal.hpp"

namespace hapcap {

/// Parameters of a generated labelled corpus. Each class has its own
/// carrier frequency and envelope rate; signals within a class differ in
/// amplitude level and tempo, which their captions also describe.
struct SyntheticSpec {
  int classes = 8;
  int signals_per_class = 12;
  int participants = 3;
  int sample_rate = 2000;
  double duration_s = 10.0;
  /// Probability that a caption borrows the class word of another category.
  double overlap = 0.3;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<VibrationSignal> signals;
  std::vector<CaptionRecord> captions;  // one per (signal, category, participant)
  std::map<std::string, int> signal_class;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

/// Distinct words the generator can emit.
std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec);

}  // namespace hapcap
