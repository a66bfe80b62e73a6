// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hapcap/error.hpp"
#include "hapcap/random.hpp"

namespace hapcap {

namespace {

double clip_unit(double x) { return std::clamp(x, -1.0, 1.0); }

void clip_all(std::vector<double>& x) {
  for (double& v : x) v = clip_unit(v);
}

// Tiles `x` end to end (or truncates it) to exactly `length` samples.
std::vector<double> fit_length(std::span<const double> x, std::size_t length) {
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = x[i % x.size()];
  return out;
}

VibrationSignal derived(const VibrationSignal& parent, SignalOrigin origin,
                        std::string op_tag, std::vector<double> samples) {
  VibrationSignal out;
  out.id = parent.id + "_" + op_tag;
  out.samples = std::move(samples);
  out.sample_rate = parent.sample_rate;
  out.provenance.origin = origin;
  out.provenance.parent_ids = {parent.id};
  out.provenance.op_tag = std::move(op_tag);
  return out;
}

void add_noise(std::vector<double>& x, double fraction, std::uint64_t seed) {
  if (fraction == 0.0) return;
  const double sigma = fraction * rms(x);
  if (sigma == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (double& v : x) v = clip_unit(v + gauss(rng));
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidInput(fmt::format("{} must be positive, got {}", what, value));
  }
}

}  // namespace

const char* to_string(SignalOrigin origin) {
  switch (origin) {
    case SignalOrigin::kImported: return "imported";
    case SignalOrigin::kParametric: return "parametric";
    case SignalOrigin::kTransformed: return "transformed";
    case SignalOrigin::kAugmented: return "augmented";
  }
  return "imported";
}

SignalOrigin parse_signal_origin(const std::string& text) {
  if (text == "imported") return SignalOrigin::kImported;
  if (text == "parametric") return SignalOrigin::kParametric;
  if (text == "transformed") return SignalOrigin::kTransformed;
  if (text == "augmented") return SignalOrigin::kAugmented;
  throw InvalidInput("unknown signal origin '" + text + "'");
}

void validate(const VibrationSignal& s) {
  if (s.samples.empty()) throw InvalidInput("signal '" + s.id + "' is empty");
  if (s.sample_rate <= 0) {
    throw InvalidInput(fmt::format("signal '{}' has non-positive sample rate {}",
                                   s.id, s.sample_rate));
  }
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const double v = s.samples[i];
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
      throw InvalidInput(fmt::format(
          "signal '{}' sample {} = {} outside [-1, 1]", s.id, i, v));
    }
  }
  const auto origin = s.provenance.origin;
  if ((origin == SignalOrigin::kTransformed ||
       origin == SignalOrigin::kAugmented) &&
      s.provenance.parent_ids.empty()) {
    throw InvalidInput("derived signal '" + s.id + "' has no parent ids");
  }
}

std::size_t target_length(double seconds, int sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum / static_cast<double>(x.size()));
}

VibrationSignal normalize_duration(const VibrationSignal& s,
                                   double target_seconds) {
  validate(s);
  require_positive(target_seconds, "target duration");
  const std::size_t length = target_length(target_seconds, s.sample_rate);
  if (length == 0) throw InvalidInput("target duration rounds to zero samples");
  VibrationSignal out = s;
  if (s.samples.size() == length) return out;

  const char* action = s.samples.size() < length ? "tile" : "truncate";
  out.samples = fit_length(s.samples, length);
  std::string tag = fmt::format("normalize:{}", action);
  out.provenance.op_tag =
      s.provenance.op_tag.empty() ? tag : s.provenance.op_tag + "+" + tag;
  return out;
}

VibrationSignal time_reverse(const VibrationSignal& s) {
  validate(s);
  std::vector<double> samples(s.samples.rbegin(), s.samples.rend());
  return derived(s, SignalOrigin::kTransformed, "reverse", std::move(samples));
}

VibrationSignal repeat_segment(const VibrationSignal& s, std::size_t start,
                               std::size_t end, int repeat_count) {
  validate(s);
  if (start >= end || end > s.samples.size()) {
    throw InvalidInput(fmt::format(
        "segment [{}, {}) invalid for signal of {} samples", start, end,
        s.samples.size()));
  }
  if (repeat_count < 1) {
    throw InvalidInput(fmt::format("repeat count must be >= 1, got {}",
                                   repeat_count));
  }
  std::vector<double> samples(s.samples.begin(), s.samples.begin() + start);
  for (int r = 0; r < repeat_count; ++r) {
    samples.insert(samples.end(), s.samples.begin() + start,
                   s.samples.begin() + end);
  }
  samples.insert(samples.end(), s.samples.begin() + end, s.samples.end());
  samples = fit_length(samples, target_length(kDefaultDurationSeconds,
                                              s.sample_rate));
  return derived(s, SignalOrigin::kTransformed,
                 fmt::format("repeat{}-{}x{}", start, end, repeat_count),
                 std::move(samples));
}

VibrationSignal mix_signals(std::span<const VibrationSignal> signals,
                            std::span<const double> weights) {
  if (signals.size() < 2) throw InvalidInput("mixing needs at least 2 signals");
  if (weights.size() != signals.size()) {
    throw InvalidInput(fmt::format("{} weights for {} signals", weights.size(),
                                   signals.size()));
  }
  for (const auto& s : signals) validate(s);
  const int rate = signals.front().sample_rate;
  const std::size_t length = signals.front().samples.size();
  for (const auto& s : signals) {
    if (s.sample_rate != rate || s.samples.size() != length) {
      throw InvalidInput("mixed signals must share sample rate and length");
    }
  }

  std::vector<std::size_t> order(signals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (signals[a].id != signals[b].id) return signals[a].id < signals[b].id;
    if (weights[a] != weights[b]) return weights[a] < weights[b];
    return signals[a].samples < signals[b].samples;
  });

  std::vector<double> sum(length, 0.0);
  double input_peak = 0.0;
  for (std::size_t k : order) {
    const auto& x = signals[k].samples;
    for (std::size_t i = 0; i < length; ++i) {
      sum[i] += weights[k] * x[i];
      input_peak = std::max(input_peak, std::abs(x[i]));
    }
  }
  double mix_peak = 0.0;
  for (double v : sum) mix_peak = std::max(mix_peak, std::abs(v));
  if (mix_peak > 0.0) {
    const double target_peak = std::min(1.0, input_peak);
    if (target_peak != mix_peak) {
      const double scale = target_peak / mix_peak;
      for (double& v : sum) v *= scale;
    }
  }
  clip_all(sum);

  VibrationSignal out;
  std::string ids;
  std::string tag = "mix:";
  for (std::size_t n = 0; n < order.size(); ++n) {
    const std::size_t k = order[n];
    if (n > 0) {
      ids += "+";
      tag += ",";
    }
    ids += signals[k].id;
    tag += fmt::format("{}", weights[k]);
    out.provenance.parent_ids.push_back(signals[k].id);
  }
  out.id = "mix(" + ids + ")";
  out.samples = std::move(sum);
  out.sample_rate = rate;
  out.provenance.origin = SignalOrigin::kTransformed;
  out.provenance.op_tag = std::move(tag);
  return out;
}

std::vector<double> low_pass(std::span<const double> x, double cutoff_hz,
                             int sample_rate) {
  if (sample_rate <= 0) throw InvalidInput("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
    throw InvalidInput(fmt::format(
        "cutoff {} Hz outside (0, {}) for rate {}", cutoff_hz,
        sample_rate / 2.0, sample_rate));
  }
  const double a = 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz /
                                   static_cast<double>(sample_rate));
  std::vector<double> y(x.size());
  double state = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    state += a * (x[i] - state);
    y[i] = state;
  }
  return y;
}

VibrationSignal low_pass_filter(const VibrationSignal& s, double cutoff_hz) {
  validate(s);
  auto y = low_pass(s.samples, cutoff_hz, s.sample_rate);
  clip_all(y);
  return derived(s, SignalOrigin::kTransformed,
                 fmt::format("lowpass{}", cutoff_hz), std::move(y));
}

std::vector<double> resample_linear(std::span<const double> x, double factor) {
  require_positive(factor, "stretch factor");
  if (x.empty()) throw InvalidInput("cannot resample an empty signal");
  const auto n = static_cast<double>(x.size());
  const auto length =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * factor)));
  const std::size_t last = x.size() - 1;
  std::vector<double> out(length);
  for (std::size_t j = 0; j < length; ++j) {
    const double pos = static_cast<double>(j) / factor;
    const auto i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= last) {
      out[j] = x[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out[j] = frac == 0.0 ? x[i0] : x[i0] + frac * (x[i0 + 1] - x[i0]);
  }
  return out;
}

VibrationSignal stretch(const VibrationSignal& s, double factor) {
  validate(s);
  auto samples = resample_linear(s.samples, factor);
  samples = fit_length(samples, target_length(kDefaultDurationSeconds,
                                              s.sample_rate));
  return derived(s, SignalOrigin::kAugmented,
                 AugmentationOp{{{AugmentationKind::kStretch, factor}}}.tag(),
                 std::move(samples));
}

VibrationSignal amplify(const VibrationSignal& s, double gain) {
  validate(s);
  require_positive(gain, "gain");
  std::vector<double> samples = s.samples;
  for (double& v : samples) v = clip_unit(v * gain);
  return derived(s, SignalOrigin::kAugmented,
                 AugmentationOp{{{AugmentationKind::kAmplify, gain}}}.tag(),
                 std::move(samples));
}

VibrationSignal inject_noise(const VibrationSignal& s,
                             double noise_amplitude_fraction,
                             std::uint64_t seed) {
  validate(s);
  if (!(noise_amplitude_fraction >= 0.0) ||
      !std::isfinite(noise_amplitude_fraction)) {
    throw InvalidInput(fmt::format("noise fraction must be >= 0, got {}",
                                   noise_amplitude_fraction));
  }
  std::vector<double> samples = s.samples;
  add_noise(samples, noise_amplitude_fraction, seed);
  return derived(
      s, SignalOrigin::kAugmented,
      AugmentationOp{{{AugmentationKind::kNoise, noise_amplitude_fraction}}}.tag(),
      std::move(samples));
}

std::string AugmentationOp::tag() const {
  std::string out;
  for (const auto& step : steps) {
    if (!out.empty()) out += "+";
    switch (step.kind) {
      case AugmentationKind::kStretch: out += "stretch"; break;
      case AugmentationKind::kAmplify: out += "amplify"; break;
      case AugmentationKind::kNoise: out += "noise"; break;
    }
    out += fmt::format("{}", step.value);
  }
  return out;
}

VibrationSignal apply_augmentation(const VibrationSignal& s,
                                   const AugmentationOp& op,
                                   std::uint64_t seed) {
  validate(s);
  if (op.steps.empty()) throw InvalidInput("augmentation has no steps");
  const std::size_t length = target_length(kDefaultDurationSeconds, s.sample_rate);
  std::vector<double> x = s.samples;
  for (const auto& step : op.steps) {
    switch (step.kind) {
      case AugmentationKind::kStretch:
        x = fit_length(resample_linear(x, step.value), length);
        break;
      case AugmentationKind::kAmplify:
        require_positive(step.value, "gain");
        for (double& v : x) v = clip_unit(v * step.value);
        break;
      case AugmentationKind::kNoise:
        if (!(step.value >= 0.0)) throw InvalidInput("noise fraction must be >= 0");
        add_noise(x, step.value, seed);
        break;
    }
  }
  if (x.size() != length) x = fit_length(x, length);
  return derived(s, SignalOrigin::kAugmented, op.tag(), std::move(x));
}

const std::vector<AugmentationOp>& augmentation_suite_ops() {
  using K = AugmentationKind;
  static const std::vector<AugmentationOp> ops = {
      {{{K::kStretch, 0.8}}},
      {{{K::kStretch, 1.25}}},
      {{{K::kAmplify, 0.7}}},
      {{{K::kAmplify, 1.3}}},
      {{{K::kNoise, 0.05}}},
      {{{K::kStretch, 0.8}, {K::kAmplify, 1.3}}},
      {{{K::kStretch, 1.25}, {K::kNoise, 0.05}}},
      {{{K::kAmplify, 0.7}, {K::kNoise, 0.05}}},
  };
  return ops;
}

std::vector<VibrationSignal> augment_suite(const VibrationSignal& s,
                                           std::uint64_t seed) {
  const auto& ops = augmentation_suite_ops();
  std::vector<VibrationSignal> out;
  out.reserve(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    out.push_back(apply_augmentation(s, ops[i], derive_seed(seed, i)));
  }
  return out;
}

}  // namespace hapcap
