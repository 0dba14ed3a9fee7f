#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "transcad/errors.hpp"
#include "transcad/nn/layers.hpp"

namespace transcad::nn {

// Checkpoint container: magic + version, a JSON manifest (parameter name ->
// shape/offset plus a free-form meta object), then the raw little-endian
// double blob. Round trips are bit-identical.
constexpr char kCheckpointMagic[8] = {'T', 'C', 'C', 'K', 'P', 'T', '0', '1'};

inline void save_checkpoint(const ParamStore& params, const nlohmann::json& meta,
                            const std::string& path) {
  nlohmann::json manifest;
  manifest["meta"] = meta;
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& name : params.order) {
    const Tensor& t = params.at(name);
    tensors.push_back({{"name", name},
                       {"rows", t.rows},
                       {"cols", t.cols},
                       {"offset", offset},
                       {"count", t.size()}});
    offset += t.size();
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& name : params.order) {
    const Tensor& t = params.at(name);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

struct Checkpoint {
  ParamStore params;
  nlohmann::json meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw ParseError(path + ": bad checkpoint magic/version");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError(path + ": truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": manifest parse error: " + e.what());
  }

  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& jt : manifest.at("tensors")) {
    const std::string name = jt.at("name").get<std::string>();
    Tensor& t =
        ck.params.create(name, jt.at("rows").get<std::size_t>(), jt.at("cols").get<std::size_t>());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw ParseError(path + ": truncated tensor data for " + name);
  }
  return ck;
}

}  // namespace transcad::nn
