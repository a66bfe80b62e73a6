// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hapcap {

enum class SignalOrigin { kImported, kParametric, kTransformed, kAugmented };

const char* to_string(SignalOrigin origin);
SignalOrigin parse_signal_origin(const std::string& text);

struct SignalProvenance {
  SignalOrigin origin = SignalOrigin::kImported;
  std::vector<std::string> parent_ids;
  std::string op_tag;

  bool operator==(const SignalProvenance&) const = default;
};

/// A sampled vibration waveform. Samples live in [-1, 1].
struct VibrationSignal {
  std::string id;
  std::vector<double> samples;
  int sample_rate = 0;
  SignalProvenance provenance;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  bool operator==(const VibrationSignal&) const = default;
};

/// Throws InvalidInput unless the signal is non-empty, has a positive rate,
/// every sample is finite and in [-1, 1], and the provenance is consistent.
void validate(const VibrationSignal& s);

inline constexpr double kDefaultDurationSeconds = 10.0;

/// Number of samples a signal of `seconds` has at `sample_rate`.
std::size_t target_length(double seconds, int sample_rate);

VibrationSignal normalize_duration(const VibrationSignal& s,
                                   double target_seconds = kDefaultDurationSeconds);

VibrationSignal time_reverse(const VibrationSignal& s);

/// Splices `repeat_count` consecutive copies of [start, end) in place of the
/// segment, then normalizes the duration.
VibrationSignal repeat_segment(const VibrationSignal& s, std::size_t start,
                               std::size_t end, int repeat_count);

/// Weighted sample-wise sum, rescaled so the peak equals
/// min(1, largest input peak). The summation order is canonical (sorted by
/// id, then weight), so the result does not depend on argument order.
VibrationSignal mix_signals(std::span<const VibrationSignal> signals,
                            std::span<const double> weights);

/// First-order recursive low-pass, zero initial state, unit DC gain:
///   y[n] = y[n-1] + a (x[n] - y[n-1]),  a = 1 - exp(-2 pi fc / fs)
VibrationSignal low_pass_filter(const VibrationSignal& s, double cutoff_hz);
std::vector<double> low_pass(std::span<const double> x, double cutoff_hz,
                             int sample_rate);

/// Linear-interpolation resampling kernel used by stretch(). Output sample j
/// reads input position j / factor (held at the last sample past the end);
/// output length is round(N * factor), at least 1.
std::vector<double> resample_linear(std::span<const double> x, double factor);

VibrationSignal stretch(const VibrationSignal& s, double factor);
VibrationSignal amplify(const VibrationSignal& s, double gain);
VibrationSignal inject_noise(const VibrationSignal& s,
                             double noise_amplitude_fraction,
                             std::uint64_t seed);

double rms(std::span<const double> x);

enum class AugmentationKind { kStretch, kAmplify, kNoise };

struct AugmentationStep {
  AugmentationKind kind;
  double value;  // stretch factor, gain or noise fraction
};

/// One augmentation: a single step, or a combo of >= 2 steps applied in
/// declared order.
struct AugmentationOp {
  std::vector<AugmentationStep> steps;

  bool is_combo() const { return steps.size() >= 2; }
  std::string tag() const;
};

/// Applies `op` to a normalized signal. Provenance records `s.id` as the
/// single parent. Steps that draw noise use `seed`.
VibrationSignal apply_augmentation(const VibrationSignal& s,
                                   const AugmentationOp& op,
                                   std::uint64_t seed);

/// The fixed eight-variant suite: stretch {0.8, 1.25}, amplify {0.7, 1.3},
/// noise {0.05}, and combos stretch 0.8 + amplify 1.3, stretch 1.25 +
/// noise 0.05, amplify 0.7 + noise 0.05.
const std::vector<AugmentationOp>& augmentation_suite_ops();

std::vector<VibrationSignal> augment_suite(const VibrationSignal& s,
                                           std::uint64_t seed);

}  // namespace hapcap
