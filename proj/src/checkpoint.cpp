// Copyright 2026 The HapCap Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>

#include "hapcap/encoders.hpp"
#include "hapcap/error.hpp"

namespace hapcap {

using json = nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

constexpr char kMagic[8] = {'H', 'A', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw IoError("truncated checkpoint");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

json dims_json(const EncoderDims& d) {
  return {{"embed_dim", d.embed_dim},       {"text_hidden", d.text_hidden},
          {"text_depth", d.text_depth},     {"haptic_input", d.haptic_input},
          {"haptic_hidden", d.haptic_hidden}, {"haptic_depth", d.haptic_depth},
          {"d1", d.d1},                     {"d2", d.d2},
          {"d", d.d}};
}

EncoderDims dims_from_json(const json& j) {
  EncoderDims d;
  d.embed_dim = j.at("embed_dim");
  d.text_hidden = j.at("text_hidden");
  d.text_depth = j.at("text_depth");
  d.haptic_input = j.at("haptic_input");
  d.haptic_hidden = j.at("haptic_hidden");
  d.haptic_depth = j.at("haptic_depth");
  d.d1 = j.at("d1");
  d.d2 = j.at("d2");
  d.d = j.at("d");
  return d;
}

}  // namespace

std::string serialize_checkpoint(const EncoderState& state) {
  validate(state);
  const auto params = parameters(state);

  json header;
  header["dims"] = dims_json(state.dims);
  header["text_trainable"] = state.text_trainable;
  header["haptic_trainable"] = state.haptic_trainable;
  header["vocab"] = state.vocab.tokens();
  json tensors = json::array();
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name}, {"rows", p.value->rows()},
                       {"cols", p.value->cols()}});
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  for (const auto& p : params) {
    // Column-major, matching Eigen's storage.
    const auto* data = reinterpret_cast<const char*>(p.value->data());
    out.append(data, static_cast<std::size_t>(p.value->size()) * sizeof(double));
  }
  return out;
}

EncoderState deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) {
    throw IoError(fmt::format("unsupported checkpoint version {}", version));
  }
  const auto header_size = take<std::uint64_t>(bytes, pos);
  if (pos + header_size > bytes.size()) throw IoError("truncated checkpoint header");
  EncoderState state;
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_size));
    pos += header_size;
    state.dims = dims_from_json(header.at("dims"));
    state.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
    state.text_trainable = header.at("text_trainable");
    state.haptic_trainable = header.at("haptic_trainable");
  } catch (const json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  }
  state.text_layers.resize(state.dims.text_depth);
  state.haptic_layers.resize(state.dims.haptic_depth);
  auto params = parameters(state);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw IoError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].at("name") != params[i].name) {
      throw IoError("checkpoint tensor order mismatch at " + params[i].name);
    }
    const Eigen::Index rows = tensors[i].at("rows");
    const Eigen::Index cols = tensors[i].at("cols");
    const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (pos + n > bytes.size()) throw IoError("truncated checkpoint tensor data");
    params[i].value->resize(rows, cols);
    std::memcpy(params[i].value->data(), bytes.data() + pos, n);
    pos += n;
  }
  if (pos != bytes.size()) throw IoError("trailing bytes in checkpoint");
  try {
    validate(state);
  } catch (const InvalidInput& e) {
    throw IoError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderState& state) {
  const auto bytes = serialize_checkpoint(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

EncoderState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

}  // namespace hapcap
