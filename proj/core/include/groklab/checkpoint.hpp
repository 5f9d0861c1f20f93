// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint container: magic "GROKCKPT1\n", one UTF-8 JSON manifest line
// mapping tensor name -> {shape, dtype, byte offset, byte length}, a blank
// line, then the concatenated little-endian IEEE-754 payloads in manifest
// (offset) order. Round-trips bit-exactly.

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groklab/common.hpp"
#include "groklab/model.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

inline constexpr char kCheckpointMagic[] = "GROKCKPT1\n";

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian");

template <typename T>
const char* dtype_name() {
  if constexpr (sizeof(T) == 4) return "f32";
  else return "f64";
}

template <typename T>
void save_checkpoint(const std::string& path, const Params<T>& params) {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<char> payload;
  const_cast<Params<T>&>(params).for_each([&](const char* name,
                                              Tensor<T>& t) {
    size_t bytes = t.data.size() * sizeof(T);
    manifest[name] = {{"shape", t.shape},
                      {"dtype", dtype_name<T>()},
                      {"offset", payload.size()},
                      {"length", bytes}};
    size_t pos = payload.size();
    payload.resize(pos + bytes);
    std::memcpy(payload.data() + pos, t.data.data(), bytes);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << kCheckpointMagic;
  out << manifest.dump() << "\n\n";
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

template <typename T>
Params<T> load_checkpoint(const std::string& path, const ModelConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic(sizeof(kCheckpointMagic) - 1, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kCheckpointMagic) {
    throw IoError("bad checkpoint magic in " + path);
  }
  std::string manifest_line;
  if (!std::getline(in, manifest_line)) {
    throw IoError("missing checkpoint manifest in " + path);
  }
  std::string blank;
  std::getline(in, blank);
  if (!blank.empty()) throw IoError("malformed checkpoint header in " + path);
  nlohmann::json manifest = nlohmann::json::parse(manifest_line);

  std::vector<char> payload((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());

  auto read_tensor = [&](const std::string& name) {
    if (!manifest.contains(name)) {
      throw IoError("checkpoint missing tensor '" + name + "'");
    }
    const auto& e = manifest[name];
    std::vector<int> shape = e["shape"].get<std::vector<int>>();
    std::string dtype = e["dtype"].get<std::string>();
    size_t offset = e["offset"].get<size_t>();
    size_t length = e["length"].get<size_t>();
    if (offset + length > payload.size()) {
      throw IoError("checkpoint payload truncated for '" + name + "'");
    }
    Tensor<T> t = Tensor<T>::zeros(shape);
    if (dtype == dtype_name<T>()) {
      if (length != t.data.size() * sizeof(T)) {
        throw IoError("checkpoint length mismatch for '" + name + "'");
      }
      std::memcpy(t.data.data(), payload.data() + offset, length);
    } else if (dtype == "f32") {
      std::vector<float> tmp(length / sizeof(float));
      std::memcpy(tmp.data(), payload.data() + offset, length);
      if (tmp.size() != t.data.size()) {
        throw IoError("checkpoint length mismatch for '" + name + "'");
      }
      for (size_t i = 0; i < tmp.size(); ++i) t.data[i] = static_cast<T>(tmp[i]);
    } else if (dtype == "f64") {
      std::vector<double> tmp(length / sizeof(double));
      std::memcpy(tmp.data(), payload.data() + offset, length);
      if (tmp.size() != t.data.size()) {
        throw IoError("checkpoint length mismatch for '" + name + "'");
      }
      for (size_t i = 0; i < tmp.size(); ++i) t.data[i] = static_cast<T>(tmp[i]);
    } else {
      throw IoError("unknown dtype '" + dtype + "' in checkpoint");
    }
    return t;
  };

  Params<T> p;
  // Allocate the expected structure, then fill by name.
  p = init_params<T>(cfg);
  p.for_each([&](const char* name, Tensor<T>& t) {
    Tensor<T> loaded = read_tensor(name);
    if (loaded.shape != t.shape) {
      throw IoError(std::string("checkpoint shape mismatch for '") + name +
                    "': got " + shape_str(loaded.shape) + ", expected " +
                    shape_str(t.shape));
    }
    t = std::move(loaded);
  });
  return p;
}

}  // namespace groklab
