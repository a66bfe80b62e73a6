// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hapcap/signal.hpp"

namespace hapcap {

struct AmplitudeStats {
  double max = 0.0;
  double min = 0.0;
  double rms = 0.0;
  double energy = 0.0;  // sum of squares == rms^2 * length
};

struct FeatureVector {
  std::string signal_id;
  AmplitudeStats amplitude;
  double zero_crossing_rate = 0.0;
  double envelope_frequency_hz = 0.0;
};

/// Sign changes between consecutive samples over (len - 1); zero counts as
/// positive. Needs at least two samples.
double zero_crossing_rate(std::span<const double> x);
double zero_crossing_rate(const VibrationSignal& s);

AmplitudeStats amplitude_stats(std::span<const double> x);
AmplitudeStats amplitude_stats(const VibrationSignal& s);

inline constexpr double kEnvelopeCutoffHz = 20.0;
/// A spectral peak counts only if its amplitude reaches this fraction of the
/// mean envelope level; otherwise the envelope is treated as flat.
inline constexpr double kEnvelopePeakFloor = 0.1;

/// Dominant frequency (Hz) of the rectified, 20 Hz low-passed envelope.
/// Returns 0 for flat envelopes.
double envelope_frequency(const VibrationSignal& s);

FeatureVector extract_features(const VibrationSignal& s);

inline constexpr int kMelBands = 128;
inline constexpr double kLogFloorEpsilon = 1e-10;

struct SpectrogramOptions {
  double window_s = 0.025;
  double hop_s = 0.010;
  /// FFT size; 0 picks the smallest power of two >= max(window, 512).
  int n_fft = 0;
};

/// frames x 128 log mel energies, row-major.
struct LogMelSpectrogram {
  std::size_t frames = 0;
  std::size_t bands = kMelBands;
  std::size_t window_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t n_fft = 0;
  double window_s = 0.0;
  double hop_s = 0.0;
  std::vector<double> values;

  double at(std::size_t frame, std::size_t band) const {
    return values[frame * bands + band];
  }
};

/// 1 + floor((num_samples - window) / hop); 0 if the signal is shorter than
/// one window.
std::size_t spectrogram_frame_count(std::size_t num_samples, std::size_t window,
                                    std::size_t hop);

/// Hann-windowed power spectrum through 128 triangular (HTK) mel filters
/// spanning 0 Hz to Nyquist, then natural log floored at 1e-10.
LogMelSpectrogram log_mel_spectrogram(const VibrationSignal& s,
                                      const SpectrogramOptions& options = {});

/// Per-band temporal mean (first 128) then standard deviation (next 128).
std::vector<double> pooled_band_stats(const LogMelSpectrogram& spec);

/// Mel filterbank for `n_fft` at `sample_rate`: kMelBands rows of
/// n_fft/2 + 1 weights each, row-major.
std::vector<double> mel_filterbank(int sample_rate, std::size_t n_fft);

/// CSV with header signal_id,max,min,rms,energy,zero_crossing_rate,
/// envelope_frequency_hz; rows sorted by id.
std::string feature_table_csv(std::span<const VibrationSignal> signals);
void export_feature_table(std::span<const VibrationSignal> signals,
                          const std::filesystem::path& path);

/// Debug dump: a `# frames=<n> bands=<b>` header then one frame per line.
void write_spectrogram_csv(const std::filesystem::path& path,
                           const LogMelSpectrogram& spec);

}  // namespace hapcap
