// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hapcap/signal.hpp"

namespace hapcap {

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a mono WAV file (16-bit PCM or 32-bit IEEE float). Samples outside
/// [-1, 1] are clipped. The id defaults to the file stem.
VibrationSignal read_wav(const std::filesystem::path& path,
                         std::optional<std::string> id = std::nullopt);
void write_wav(const std::filesystem::path& path, const VibrationSignal& s,
               WavEncoding encoding = WavEncoding::kFloat32);

/// CSV signal: a `sample_rate=<int>` header line then one amplitude per line.
VibrationSignal read_signal_csv(const std::filesystem::path& path,
                                std::optional<std::string> id = std::nullopt);
void write_signal_csv(const std::filesystem::path& path, const VibrationSignal& s);

/// Dispatches on extension (.wav or .csv).
VibrationSignal read_signal(const std::filesystem::path& path,
                            std::optional<std::string> id = std::nullopt);

struct SignalLoadFailure {
  std::filesystem::path path;
  std::string message;
};

struct SignalDirectory {
  std::vector<VibrationSignal> signals;  // sorted by file name
  std::vector<std::filesystem::path> files;
  std::vector<SignalLoadFailure> failures;
};

/// Loads every .wav/.csv file directly inside `dir`; per-file errors are
/// collected instead of thrown.
SignalDirectory load_signal_directory(const std::filesystem::path& dir);

}  // namespace hapcap
