// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "hapcap/error.hpp"
#include "hapcap/features.hpp"
#include "test_util.hpp"

namespace hapcap {
namespace {

using testing::make_signal;
using testing::random_signal;
using testing::sine;

TEST(ZeroCrossingRate, Examples) {
  EXPECT_DOUBLE_EQ(zero_crossing_rate(std::vector<double>{1, -1, 1, -1}), 1.0);
  EXPECT_DOUBLE_EQ(zero_crossing_rate(std::vector<double>{0.5, 0.5, 0.5}), 0.0);
  EXPECT_DOUBLE_EQ(zero_crossing_rate(std::vector<double>{0.0, -0.1, 0.0}), 1.0);
  EXPECT_THROW(zero_crossing_rate(std::vector<double>{0.1}), InvalidInput);
}

TEST(ZeroCrossingRate, SineMatchesAnalyticRate) {
  for (double f : {3.0, 17.0, 150.0}) {
    const int sr = 2000;
    // Small phase offset keeps samples off exact zeros.
    const auto n = static_cast<std::size_t>(10 * sr);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * f * i / sr + 0.1);
    EXPECT_NEAR(zero_crossing_rate(x), 2.0 * f / sr, 0.05 * 2.0 * f / sr);
  }
}

TEST(ZeroCrossingRate, InvariantUnderPositiveGain) {
  std::mt19937_64 rng(1);
  const auto s = random_signal(rng, 1000, 100, "z", 0.3);
  auto g = s;
  for (double& v : g.samples) v *= 2.7;
  EXPECT_EQ(zero_crossing_rate(s), zero_crossing_rate(g));
}

TEST(AmplitudeStats, Examples) {
  const auto z = amplitude_stats(std::vector<double>(10, 0.0));
  EXPECT_EQ(z.max, 0.0);
  EXPECT_EQ(z.min, 0.0);
  EXPECT_EQ(z.rms, 0.0);
  EXPECT_EQ(z.energy, 0.0);
  const auto h = amplitude_stats(std::vector<double>{0.5, -0.5});
  EXPECT_DOUBLE_EQ(h.max, 0.5);
  EXPECT_DOUBLE_EQ(h.min, -0.5);
  EXPECT_DOUBLE_EQ(h.rms, 0.5);
  EXPECT_DOUBLE_EQ(h.energy, 0.5);
}

TEST(AmplitudeStats, EnergyMatchesBruteForceAndIsAdditive) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_signal(rng, 100 + t * 17, 100);
    const auto b = random_signal(rng, 50 + t * 3, 100);
    long double sum = 0.0L;
    for (double v : a.samples) sum += static_cast<long double>(v) * v;
    const auto st = amplitude_stats(a);
    EXPECT_NEAR(st.energy, static_cast<double>(sum), 1e-9);
    EXPECT_NEAR(st.energy, st.rms * st.rms * a.samples.size(), 1e-9);
    std::vector<double> ab = a.samples;
    ab.insert(ab.end(), b.samples.begin(), b.samples.end());
    EXPECT_NEAR(amplitude_stats(ab).energy, st.energy + amplitude_stats(b).energy, 1e-9);
  }
}

TEST(EnvelopeFrequency, ConstantCarrierIsZero) {
  EXPECT_EQ(envelope_frequency(sine(150.0, 10.0, 2000, 0.8)), 0.0);
  EXPECT_EQ(envelope_frequency(make_signal("s", std::vector<double>(20000, 0.0), 2000)), 0.0);
}

TEST(EnvelopeFrequency, AmplitudeModulatedSine) {
  const int sr = 2000;
  auto s = sine(150.0, 10.0, sr);
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    s.samples[i] *= 0.5 + 0.5 * std::sin(2 * std::numbers::pi * 4.0 * i / sr);
  }
  EXPECT_NEAR(envelope_frequency(s), 4.0, 0.1 + 1e-9);
}

TEST(EnvelopeFrequency, OnOffBursts) {
  const int sr = 2000;
  auto s = sine(200.0, 10.0, sr, 0.9);
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const double t = static_cast<double>(i) / sr;
    if (std::fmod(t, 0.5) >= 0.25) s.samples[i] = 0.0;
  }
  EXPECT_NEAR(envelope_frequency(s), 2.0, 0.1 + 1e-9);
}

TEST(Spectrogram, SilenceIsFloor) {
  const auto spec = log_mel_spectrogram(make_signal("q", std::vector<double>(4000, 0.0), 2000));
  for (double v : spec.values) EXPECT_EQ(v, std::log(kLogFloorEpsilon));
}

TEST(Spectrogram, FrameCountAt8k) {
  const auto spec = log_mel_spectrogram(sine(440.0, 10.0, 8000, 0.5));
  EXPECT_EQ(spec.frames, 998u);
  EXPECT_EQ(spec.bands, 128u);
  EXPECT_EQ(spec.values.size(), 998u * 128u);
  for (double v : spec.values) EXPECT_GE(v, std::log(kLogFloorEpsilon));
}

TEST(Spectrogram, FrameCountFormulaGrid) {
  std::mt19937_64 rng(3);
  const auto s = random_signal(rng, 3001, 1000);
  for (double win : {0.01, 0.025, 0.064}) {
    for (double hop : {0.003, 0.01, 0.02}) {
      const auto spec = log_mel_spectrogram(s, {win, hop, 0});
      const std::size_t w = std::llround(win * 1000), h = std::llround(hop * 1000);
      EXPECT_EQ(spec.frames, 1 + (3001 - w) / h) << win << " " << hop;
    }
  }
}

TEST(Spectrogram, DoublingAmplitudeAddsLogFour) {
  std::mt19937_64 rng(4);
  const auto s = random_signal(rng, 2000, 2000, "x", 0.4);
  auto d = s;
  for (double& v : d.samples) v *= 2.0;
  const auto a = log_mel_spectrogram(s);
  const auto b = log_mel_spectrogram(d);
  const double floor = std::log(kLogFloorEpsilon);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] > floor) {
      EXPECT_NEAR(b.values[i] - a.values[i], std::log(4.0), 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Spectrogram, ShorterThanWindowThrows) {
  EXPECT_THROW(log_mel_spectrogram(make_signal("s", std::vector<double>(10, 0.1), 2000)),
               InvalidInput);
}

// Independent oracle: direct O(N^2) DFT and a separately written HTK filterbank.
TEST(Spectrogram, MatchesDirectDftOracle) {
  std::mt19937_64 rng(5);
  const int sr = 1000;
  const auto s = random_signal(rng, 90, sr, "o", 0.7);
  const SpectrogramOptions opt{0.04, 0.025, 64};
  const auto spec = log_mel_spectrogram(s, opt);
  const std::size_t w = 40, hop = 25, nfft = 64, bins = nfft / 2 + 1;
  ASSERT_EQ(spec.frames, 1 + (90 - w) / hop);

  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edges(130);
  for (int i = 0; i < 130; ++i) edges[i] = inv(mel(sr / 2.0) * i / 129.0);

  for (std::size_t f = 0; f < spec.frames; ++f) {
    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t n = 0; n < w; ++n) {
        const double win = 0.5 * (1.0 - std::cos(2 * std::numbers::pi * n / w));
        acc += s.samples[f * hop + n] * win *
               std::polar(1.0, -2 * std::numbers::pi * double(k * n) / nfft);
      }
      power[k] = std::norm(acc);
    }
    for (int m = 0; m < 128; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) {
        const double hz = double(k) * sr / nfft;
        const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
        double wt = 0.0;
        if (hz > lo && hz <= c) wt = (hz - lo) / (c - lo);
        if (hz > c && hz < hi) wt = (hi - hz) / (hi - c);
        e += wt * power[k];
      }
      const double expect = e > kLogFloorEpsilon ? std::log(e) : std::log(kLogFloorEpsilon);
      EXPECT_NEAR(spec.at(f, m), expect, 1e-9) << f << "," << m;
    }
  }
}

TEST(Spectrogram, PooledStatsMatchDirectComputation) {
  std::mt19937_64 rng(6);
  const auto spec = log_mel_spectrogram(random_signal(rng, 3000, 2000, "p", 0.5));
  const auto pooled = pooled_band_stats(spec);
  ASSERT_EQ(pooled.size(), 256u);
  for (std::size_t b = 0; b < 128; b += 9) {
    double mean = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) mean += spec.at(f, b);
    mean /= spec.frames;
    double var = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) var += std::pow(spec.at(f, b) - mean, 2);
    EXPECT_NEAR(pooled[b], mean, 1e-9);
    EXPECT_NEAR(pooled[128 + b], std::sqrt(var / spec.frames), 1e-9);
  }
}

TEST(FeatureTable, RowsMatchSingleCallsAndAreStable) {
  std::mt19937_64 rng(7);
  std::vector<VibrationSignal> sigs = {
      random_signal(rng, 2000, 200, "c", 0.5), sine(5.0, 10.0, 200, 0.7, "a"),
      random_signal(rng, 2000, 200, "b", 0.9)};
  const auto csv = feature_table_csv(sigs);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "signal_id,max,min,rms,energy,zero_crossing_rate,envelope_frequency_hz");
  std::vector<std::string> ids;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string id, cell;
    std::getline(row, id, ',');
    ids.push_back(id);
    const auto& s = *std::find_if(sigs.begin(), sigs.end(), [&](auto& x) { return x.id == id; });
    const auto f = extract_features(s);
    const std::vector<double> expect = {f.amplitude.max, f.amplitude.min, f.amplitude.rms,
                                        f.amplitude.energy, f.zero_crossing_rate,
                                        f.envelope_frequency_hz};
    for (double e : expect) {
      std::getline(row, cell, ',');
      EXPECT_EQ(std::strtod(cell.c_str(), nullptr), e);
    }
  }
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));

  const auto dir = testing::temp_dir("features");
  export_feature_table(sigs, dir / "one.csv");
  export_feature_table(sigs, dir / "two.csv");
  EXPECT_EQ(testing::slurp(dir / "one.csv"), testing::slurp(dir / "two.csv"));
  EXPECT_EQ(testing::slurp(dir / "one.csv"), csv);
}

}  // namespace
}  // namespace hapcap
