// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "hapcap/error.hpp"

namespace hapcap {

namespace {

// FFTW's planner is not thread-safe; executing a plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }
  void execute() { fftw_execute(plan_); }
  std::size_t bins() const { return n_ / 2 + 1; }
  double power(std::size_t k) const {
    return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }
  double magnitude(std::size_t k) const { return std::sqrt(power(k)); }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double zero_crossing_rate(std::span<const double> x) {
  if (x.size() < 2) throw InvalidInput("zero-crossing rate needs >= 2 samples");
  std::size_t changes = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] >= 0.0) != (x[i] >= 0.0)) ++changes;
  }
  return static_cast<double>(changes) / static_cast<double>(x.size() - 1);
}

double zero_crossing_rate(const VibrationSignal& s) {
  return zero_crossing_rate(std::span<const double>(s.samples));
}

AmplitudeStats amplitude_stats(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("amplitude stats of an empty signal");
  AmplitudeStats st;
  st.max = *std::max_element(x.begin(), x.end());
  st.min = *std::min_element(x.begin(), x.end());
  for (double v : x) st.energy += v * v;
  st.rms = std::sqrt(st.energy / static_cast<double>(x.size()));
  return st;
}

AmplitudeStats amplitude_stats(const VibrationSignal& s) {
  return amplitude_stats(std::span<const double>(s.samples));
}

double envelope_frequency(const VibrationSignal& s) {
  validate(s);
  std::vector<double> rectified(s.samples.size());
  std::transform(s.samples.begin(), s.samples.end(), rectified.begin(),
                 [](double v) { return std::abs(v); });
  const auto env = low_pass(rectified, kEnvelopeCutoffHz, s.sample_rate);
  const double n = static_cast<double>(env.size());
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / n;
  if (env.size() < 4 || mean <= 0.0) return 0.0;

  RealFft fft(env.size());
  auto in = fft.input();
  for (std::size_t i = 0; i < env.size(); ++i) in[i] = env[i] - mean;
  fft.execute();

  std::size_t best = 0;
  double best_mag = 0.0;
  for (std::size_t k = 1; k < fft.bins(); ++k) {
    const double mag = fft.magnitude(k);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  // One-sided sinusoid amplitude for bin `best`.
  const double amplitude = 2.0 * best_mag / n;
  if (best == 0 || amplitude < kEnvelopePeakFloor * mean) return 0.0;
  return static_cast<double>(best) * s.sample_rate / n;
}

FeatureVector extract_features(const VibrationSignal& s) {
  FeatureVector f;
  f.signal_id = s.id;
  f.amplitude = amplitude_stats(s);
  f.zero_crossing_rate = zero_crossing_rate(s);
  f.envelope_frequency_hz = envelope_frequency(s);
  return f;
}

std::size_t spectrogram_frame_count(std::size_t num_samples, std::size_t window,
                                    std::size_t hop) {
  if (window == 0 || hop == 0 || num_samples < window) return 0;
  return 1 + (num_samples - window) / hop;
}

std::vector<double> mel_filterbank(int sample_rate, std::size_t n_fft) {
  const std::size_t bins = n_fft / 2 + 1;
  const double top_mel = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(kMelBands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top_mel * static_cast<double>(i) / (kMelBands + 1));
  }
  std::vector<double> bank(kMelBands * bins, 0.0);
  for (int m = 0; m < kMelBands; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      bank[m * bins + k] = w;
    }
  }
  return bank;
}

LogMelSpectrogram log_mel_spectrogram(const VibrationSignal& s,
                                      const SpectrogramOptions& options) {
  validate(s);
  if (!(options.window_s > 0.0) || !(options.hop_s > 0.0)) {
    throw InvalidInput("spectrogram window and hop must be positive");
  }
  LogMelSpectrogram out;
  out.window_s = options.window_s;
  out.hop_s = options.hop_s;
  out.window_samples = target_length(options.window_s, s.sample_rate);
  out.hop_samples = target_length(options.hop_s, s.sample_rate);
  if (out.window_samples < 2 || out.hop_samples < 1) {
    throw InvalidInput(fmt::format(
        "window {} s / hop {} s too short at {} Hz", options.window_s,
        options.hop_s, s.sample_rate));
  }
  out.frames = spectrogram_frame_count(s.samples.size(), out.window_samples,
                                       out.hop_samples);
  if (out.frames == 0) {
    throw InvalidInput(fmt::format(
        "signal '{}' ({} samples) is shorter than one {}-sample window", s.id,
        s.samples.size(), out.window_samples));
  }
  out.n_fft = options.n_fft > 0
                  ? static_cast<std::size_t>(options.n_fft)
                  : next_pow2(std::max<std::size_t>(out.window_samples, 512));
  if (out.n_fft < out.window_samples) {
    throw InvalidInput("n_fft must be at least the window length");
  }

  const std::size_t w = out.window_samples;
  std::vector<double> hann(w);
  for (std::size_t i = 0; i < w; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(w));
  }
  const auto bank = mel_filterbank(s.sample_rate, out.n_fft);
  RealFft fft(out.n_fft);
  const std::size_t bins = fft.bins();
  std::vector<double> power(bins);
  const double log_floor = std::log(kLogFloorEpsilon);
  out.values.assign(out.frames * kMelBands, log_floor);

  for (std::size_t f = 0; f < out.frames; ++f) {
    auto in = fft.input();
    std::fill(in.begin(), in.end(), 0.0);
    const std::size_t offset = f * out.hop_samples;
    for (std::size_t i = 0; i < w; ++i) in[i] = s.samples[offset + i] * hann[i];
    fft.execute();
    for (std::size_t k = 0; k < bins; ++k) power[k] = fft.power(k);
    for (int m = 0; m < kMelBands; ++m) {
      const double* row = bank.data() + m * bins;
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += row[k] * power[k];
      out.values[f * kMelBands + m] =
          e > kLogFloorEpsilon ? std::log(e) : log_floor;
    }
  }
  return out;
}

std::vector<double> pooled_band_stats(const LogMelSpectrogram& spec) {
  std::vector<double> out(2 * spec.bands, 0.0);
  if (spec.frames == 0) return out;
  const double n = static_cast<double>(spec.frames);
  for (std::size_t b = 0; b < spec.bands; ++b) {
    double sum = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) sum += spec.at(f, b);
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) {
      const double d = spec.at(f, b) - mean;
      sq += d * d;
    }
    out[b] = mean;
    out[spec.bands + b] = std::sqrt(sq / n);
  }
  return out;
}

std::string feature_table_csv(std::span<const VibrationSignal> signals) {
  std::vector<FeatureVector> rows;
  rows.reserve(signals.size());
  for (const auto& s : signals) rows.push_back(extract_features(s));
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.signal_id < b.signal_id; });
  std::string csv =
      "signal_id,max,min,rms,energy,zero_crossing_rate,envelope_frequency_hz\n";
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", r.signal_id, r.amplitude.max,
                       r.amplitude.min, r.amplitude.rms, r.amplitude.energy,
                       r.zero_crossing_rate, r.envelope_frequency_hz);
  }
  return csv;
}

void export_feature_table(std::span<const VibrationSignal> signals,
                          const std::filesystem::path& path) {
  const auto csv = feature_table_csv(signals);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << csv;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_spectrogram_csv(const std::filesystem::path& path,
                           const LogMelSpectrogram& spec) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << fmt::format("# frames={} bands={} window_s={} hop_s={}\n", spec.frames,
                     spec.bands, spec.window_s, spec.hop_s);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t b = 0; b < spec.bands; ++b) {
      out << (b ? "," : "") << fmt::format("{}", spec.at(f, b));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace hapcap
