#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"

namespace transcad {

// Hierarchical model / flat single-decoder ablation / refiner-less ablation.
enum class ModelVariant { Hierarchical, NoRefiner, Flat };

inline const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Hierarchical: return "hierarchical";
    case ModelVariant::NoRefiner: return "no_refiner";
    case ModelVariant::Flat: return "flat";
  }
  return "?";
}

inline ModelVariant model_variant_from_string(const std::string& s) {
  if (s == "hierarchical") return ModelVariant::Hierarchical;
  if (s == "no_refiner") return ModelVariant::NoRefiner;
  if (s == "flat") return ModelVariant::Flat;
  throw ParseError("unknown model variant '" + s + "'");
}

struct EncoderLevel {
  int points = 0;
  double radius = 0.0;
  int samples = 0;
  int channels = 0;  // per-point feature width produced by this level
};

struct ModelConfig {
  std::string preset = "toy";
  ModelVariant variant = ModelVariant::Hierarchical;

  int n_points = 512;
  int d_p = 16;   // final per-point feature dim
  int d_z = 32;   // token embedding dim
  int l_max = kLMax;
  int np_max = kNpMax;
  int bins = 256;

  int decoder_blocks = 4;
  int heads = 4;
  int ff_dim = 64;
  double dropout = 0.0;

  std::vector<EncoderLevel> levels;

  int type_head_hidden = 64;
  int ext_head_hidden = 64;
  int refiner_hidden = 128;

  // training defaults
  double lr = 1e-3;
  int warmup_steps = 100;
  int batch_size = 8;

  int num_classes() const { return bins + 1; }

  static ModelConfig toy() {
    ModelConfig c;
    c.preset = "toy";
    // memorization-scale runs tolerate a hotter rate than the full-scale 1e-3
    c.lr = 3e-3;
    c.levels = {{128, 0.1, 16, 32}, {64, 0.2, 16, 32}, {32, 0.4, 16, 32}, {16, 0.8, 16, 16}};
    return c;
  }

  static ModelConfig paper() {
    ModelConfig c;
    c.preset = "paper";
    c.n_points = 4096;
    c.d_z = 256;
    c.heads = 8;
    c.ff_dim = 512;
    c.dropout = 0.1;
    c.type_head_hidden = 256;
    c.ext_head_hidden = 256;
    c.refiner_hidden = 256;
    c.warmup_steps = 2000;
    c.batch_size = 72;
    c.levels = {{512, 0.1, 64, 32}, {256, 0.2, 64, 64}, {128, 0.4, 64, 64}, {16, 0.8, 32, 16}};
    return c;
  }

  static ModelConfig from_preset(const std::string& name) {
    if (name == "toy") return toy();
    if (name == "paper") return paper();
    throw ParseError("unknown preset '" + name + "' (expected toy|paper)");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["variant"] = to_string(variant);
    j["n_points"] = n_points;
    j["d_p"] = d_p;
    j["d_z"] = d_z;
    j["l_max"] = l_max;
    j["np_max"] = np_max;
    j["bins"] = bins;
    j["decoder_blocks"] = decoder_blocks;
    j["heads"] = heads;
    j["ff_dim"] = ff_dim;
    j["dropout"] = dropout;
    j["type_head_hidden"] = type_head_hidden;
    j["ext_head_hidden"] = ext_head_hidden;
    j["refiner_hidden"] = refiner_hidden;
    j["lr"] = lr;
    j["warmup_steps"] = warmup_steps;
    j["batch_size"] = batch_size;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels)
      lv.push_back({{"points", l.points}, {"radius", l.radius}, {"samples", l.samples},
                    {"channels", l.channels}});
    j["levels"] = std::move(lv);
    return j;
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.preset = j.value("preset", std::string("toy"));
    c.variant = model_variant_from_string(j.value("variant", std::string("hierarchical")));
    c.n_points = j.at("n_points").get<int>();
    c.d_p = j.at("d_p").get<int>();
    c.d_z = j.at("d_z").get<int>();
    c.l_max = j.at("l_max").get<int>();
    c.np_max = j.at("np_max").get<int>();
    c.bins = j.at("bins").get<int>();
    c.decoder_blocks = j.at("decoder_blocks").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.dropout = j.value("dropout", 0.0);
    c.type_head_hidden = j.at("type_head_hidden").get<int>();
    c.ext_head_hidden = j.at("ext_head_hidden").get<int>();
    c.refiner_hidden = j.at("refiner_hidden").get<int>();
    c.lr = j.value("lr", 1e-3);
    c.warmup_steps = j.value("warmup_steps", 100);
    c.batch_size = j.value("batch_size", 8);
    c.levels.clear();
    for (const auto& l : j.at("levels"))
      c.levels.push_back({l.at("points").get<int>(), l.at("radius").get<double>(),
                          l.at("samples").get<int>(), l.at("channels").get<int>()});
    return c;
  }
};

}  // namespace transcad
