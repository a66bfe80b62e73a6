// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include "hapcap/signal_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hapcap/error.hpp"

namespace hapcap {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw IoError("truncated WAV header");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

VibrationSignal imported(const fs::path& path, std::optional<std::string> id,
                         std::vector<double> samples, int rate) {
  VibrationSignal s;
  s.id = id ? *id : path.stem().string();
  s.samples = std::move(samples);
  s.sample_rate = rate;
  s.provenance.origin = SignalOrigin::kImported;
  validate(s);
  return s;
}

}  // namespace

VibrationSignal read_wav(const fs::path& path, std::optional<std::string> id) {
  const auto buf = slurp(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw IoError(path.string() + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_offset = 0, data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string chunk(buf.data() + pos, 4);
    const auto size = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (chunk == "fmt ") {
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = read_le<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (chunk == "data") {
      data_offset = body;
      data_size = std::min<std::size_t>(size, buf.size() - body);
      break;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt || data_offset == 0) {
    throw IoError(path.string() + ": missing fmt or data chunk");
  }
  if (channels != 1) {
    throw IoError(fmt::format("{}: expected mono, found {} channels",
                              path.string(), channels));
  }
  std::vector<double> samples;
  if (format == kFormatPcm && bits == 16) {
    samples.resize(data_size / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = read_le<std::int16_t>(buf, data_offset + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    samples.resize(data_size / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const float v = read_le<float>(buf, data_offset + 4 * i);
      samples[i] = std::isfinite(v) ? std::clamp<double>(v, -1.0, 1.0) : 0.0;
    }
  } else {
    throw IoError(fmt::format("{}: unsupported WAV encoding (format {}, {} bits)",
                              path.string(), format, bits));
  }
  return imported(path, std::move(id), std::move(samples),
                  static_cast<int>(rate));
}

void write_wav(const fs::path& path, const VibrationSignal& s,
               WavEncoding encoding) {
  validate(s);
  const bool is_float = encoding == WavEncoding::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block_align = bits / 8;
  const auto data_size =
      static_cast<std::uint32_t>(s.samples.size() * block_align);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVEfmt ", 8);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, is_float ? kFormatFloat : kFormatPcm);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.sample_rate));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.sample_rate) *
                                   block_align);
  write_le<std::uint16_t>(out, block_align);
  write_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_size);
  for (double v : s.samples) {
    if (is_float) {
      write_le<float>(out, static_cast<float>(v));
    } else {
      const double scaled = std::round(v * 32768.0);
      write_le<std::int16_t>(
          out, static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

VibrationSignal read_signal_csv(const fs::path& path,
                                std::optional<std::string> id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  constexpr std::string_view kKey = "sample_rate=";
  if (line.rfind(kKey, 0) != 0) {
    throw IoError(path.string() + ": first line must be sample_rate=<int>");
  }
  int rate = 0;
  try {
    std::size_t used = 0;
    rate = std::stoi(line.substr(kKey.size()), &used);
    if (used != line.size() - kKey.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad sample rate '" + line + "'");
  }
  std::vector<double> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      samples.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw IoError(fmt::format("{}:{}: bad amplitude '{}'", path.string(),
                                line_no, line));
    }
  }
  return imported(path, std::move(id), std::move(samples), rate);
}

void write_signal_csv(const fs::path& path, const VibrationSignal& s) {
  validate(s);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sample_rate=" << s.sample_rate << '\n';
  for (double v : s.samples) out << fmt::format("{}\n", v);
  if (!out) throw IoError("write failed for " + path.string());
}

VibrationSignal read_signal(const fs::path& path, std::optional<std::string> id) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".wav") return read_wav(path, std::move(id));
  if (ext == ".csv") return read_signal_csv(path, std::move(id));
  throw IoError(path.string() + ": unsupported signal file extension");
}

SignalDirectory load_signal_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav" || ext == ".csv") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  SignalDirectory out;
  for (const auto& p : paths) {
    try {
      out.signals.push_back(read_signal(p));
      out.files.push_back(p);
    } catch (const std::exception& e) {
      out.failures.push_back({p, e.what()});
    }
  }
  return out;
}

}  // namespace hapcap
