#pragma once

#include <string>
#include <vector>

#include "transcad/cad.hpp"
#include "transcad/model/config.hpp"
#include "transcad/model/encoder.hpp"
#include "transcad/nn/layers.hpp"
#include "transcad/point_cloud.hpp"
#include "transcad/quantize.hpp"

namespace transcad {

// To-the-grid offset targets: the continuous coordinate minus its
// dequantized quantization, bounded by half a quantization step.
inline double offset_target(double continuous, const QuantizationSpec& spec) {
  return continuous - dequantize(quantize(continuous, spec), spec);
}

// One supervised sample: canonical-order cloud plus the ground-truth
// routing, class and offset targets.
struct TrainingExample {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> token_types;       // l_max entries: 0=Loop 1=Extrusion 2=EOS
  int n_loops = 0;
  int n_exts = 0;
  std::vector<int> loop_classes;      // n_loops * np_max * 6, in [0, bins]
  std::vector<double> offsets;        // same length, grid-relative targets
  std::vector<std::uint8_t> offset_mask;  // 1 where the coordinate is live
  std::vector<int> ext_classes;       // n_exts * 11
  CadSequence sequence;
  std::string id;
};

inline TrainingExample make_training_example(const PointCloud& cloud, const CadSequence& seq,
                                             const ModelConfig& cfg) {
  TrainingExample ex;
  const auto order = canonical_order(cloud.points);
  ex.points.reserve(order.size());
  ex.normals.reserve(order.size());
  for (const auto i : order) {
    ex.points.push_back(cloud.points[i]);
    ex.normals.push_back(cloud.normals[i]);
  }

  const auto tokens = tokenize(seq, cfg.l_max);
  ex.token_types.reserve(tokens.size());
  for (const auto t : tokens) ex.token_types.push_back(static_cast<int>(t));

  const QuantizationSpec spec{cfg.bins};
  for (const auto* loop : seq.all_loops()) {
    ++ex.n_loops;
    const auto slots = loop_slot_classes(*loop, spec, cfg.np_max);
    for (int s = 0; s < cfg.np_max; ++s) {
      const bool live_slot = s < static_cast<int>(loop->primitives.size());
      const auto flat =
          live_slot ? loop->primitives[static_cast<std::size_t>(s)].flat() : std::array<double, 6>{};
      for (int c = 0; c < 6; ++c) {
        const int cls = slots[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)];
        ex.loop_classes.push_back(cls);
        const bool live = cls != spec.sentinel_index();
        ex.offset_mask.push_back(live ? 1 : 0);
        ex.offsets.push_back(live ? offset_target(flat[static_cast<std::size_t>(c)], spec) : 0.0);
      }
    }
  }
  for (const auto* ext : seq.all_extrusions()) {
    ++ex.n_exts;
    const auto q = ext->quantized(spec);
    ex.ext_classes.insert(ex.ext_classes.end(), q.begin(), q.end());
  }
  ex.sequence = seq;
  return ex;
}

// The hierarchical network: point encoder -> loop-extrusion decoder with a
// type head -> routed loop/extrusion decoders -> loop refiner. The flat
// variant keeps the token decoder but predicts every parameter directly
// from each token embedding.
struct TransCadNet {
  ModelConfig cfg;
  nn::ParamStore params;

  PointEncoder encoder;
  std::vector<nn::DecoderBlock> token_blocks;
  nn::LayerNorm token_final_ln;
  nn::Mlp type_head;

  std::vector<nn::DecoderBlock> loop_blocks;
  nn::LayerNorm loop_final_ln;
  nn::Linear loop_head;
  nn::Mlp ext_head;
  nn::Mlp refiner;

  nn::Linear flat_loop_head;
  nn::Linear flat_ext_head;

  static TransCadNet create(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.levels.empty() || cfg.levels.back().channels != cfg.d_p)
      throw Error("model config: final encoder channel width must equal d_p");
    TransCadNet net;
    net.cfg = cfg;
    Rng rng(derive_seed(seed, 0x1417ULL));
    auto& store = net.params;
    const auto d_z = static_cast<std::size_t>(cfg.d_z);
    const auto d_p = static_cast<std::size_t>(cfg.d_p);
    const auto classes = static_cast<std::size_t>(cfg.num_classes());

    net.encoder = PointEncoder::create(store, cfg, rng);

    // learned constant embeddings + learned positional embeddings
    nn::init_uniform(store.create("tokens.const", static_cast<std::size_t>(cfg.l_max), d_z), rng, 0.1);
    nn::init_uniform(store.create("tokens.pos", static_cast<std::size_t>(cfg.l_max), d_z), rng, 0.1);

    for (int b = 0; b < cfg.decoder_blocks; ++b)
      net.token_blocks.push_back(nn::DecoderBlock::create(
          store, "token_dec.b" + std::to_string(b), d_z, d_p,
          static_cast<std::size_t>(cfg.ff_dim), cfg.heads, rng));
    net.token_final_ln = nn::LayerNorm::create(store, "token_dec.final_ln", d_z);
    net.type_head = nn::Mlp::create(
        store, "type_head",
        {d_z, static_cast<std::size_t>(cfg.type_head_hidden),
         static_cast<std::size_t>(cfg.type_head_hidden), 3},
        rng, /*zero_init_last=*/true);

    if (cfg.variant == ModelVariant::Flat) {
      net.flat_loop_head = nn::Linear::create(
          store, "flat.loop_head", d_z,
          static_cast<std::size_t>(cfg.np_max) * 6 * classes, rng, /*zero_init=*/true);
      net.flat_ext_head = nn::Linear::create(store, "flat.ext_head", d_z, 11 * classes, rng,
                                             /*zero_init=*/true);
      return net;
    }

    const auto slot_rows = static_cast<std::size_t>(cfg.np_max) * static_cast<std::size_t>(cfg.l_max);
    nn::init_uniform(store.create("slots.const", slot_rows, d_z), rng, 0.1);
    nn::init_uniform(store.create("slots.pos", slot_rows, d_z), rng, 0.1);
    for (int b = 0; b < cfg.decoder_blocks; ++b)
      net.loop_blocks.push_back(nn::DecoderBlock::create(
          store, "loop_dec.b" + std::to_string(b), d_z, d_z,
          static_cast<std::size_t>(cfg.ff_dim), cfg.heads, rng));
    net.loop_final_ln = nn::LayerNorm::create(store, "loop_dec.final_ln", d_z);
    net.loop_head = nn::Linear::create(store, "loop_dec.head", d_z, 6 * classes, rng,
                                       /*zero_init=*/true);
    net.ext_head = nn::Mlp::create(
        store, "ext_head",
        {d_z, static_cast<std::size_t>(cfg.ext_head_hidden),
         static_cast<std::size_t>(cfg.ext_head_hidden), 11 * classes},
        rng, /*zero_init_last=*/true);
    if (cfg.variant == ModelVariant::Hierarchical) {
      net.refiner = nn::Mlp::create(
          store, "refiner",
          {d_z + 6 * classes, static_cast<std::size_t>(cfg.refiner_hidden),
           static_cast<std::size_t>(cfg.refiner_hidden),
           static_cast<std::size_t>(cfg.refiner_hidden), 6},
          rng, /*zero_init_last=*/true);
    }
    return net;
  }

  struct TokenForward {
    nn::NodePtr point_features;  // [n_final x d_p]
    nn::NodePtr tokens;          // [l_max x d_z]
    nn::NodePtr type_logits;     // [l_max x 3]
  };

  TokenForward forward_tokens(nn::ForwardContext& ctx, const std::vector<Vec3>& points,
                              const std::vector<Vec3>& normals) const {
    TokenForward fw;
    fw.point_features = encoder(ctx, points, normals);
    auto x = nn::add(ctx["tokens.const"], ctx["tokens.pos"]);
    for (const auto& block : token_blocks) x = block(ctx, x, fw.point_features);
    fw.tokens = token_final_ln(ctx, x);
    fw.type_logits = type_head(ctx, fw.tokens);
    return fw;
  }

  // Split token positions by type, preserving order; infer mode truncates at
  // the first EOS.
  static void route_positions(const std::vector<int>& types, std::vector<std::size_t>& loops,
                              std::vector<std::size_t>& exts) {
    loops.clear();
    exts.clear();
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (types[i] == static_cast<int>(TokenType::Eos)) break;
      if (types[i] == static_cast<int>(TokenType::Loop)) loops.push_back(i);
      else if (types[i] == static_cast<int>(TokenType::Extrusion)) exts.push_back(i);
    }
  }

  struct LoopDecode {
    nn::NodePtr slot_features;  // [n_loops*np_max x d_z]
    nn::NodePtr logits_rows;    // [n_loops*np_max*6 x classes]
    nn::NodePtr offsets;        // [n_loops*np_max x 6] (null without refiner)
  };

  LoopDecode decode_loops(nn::ForwardContext& ctx, const nn::NodePtr& tokens,
                          const std::vector<std::size_t>& loop_positions) const {
    LoopDecode out;
    const auto n_loops = loop_positions.size();
    if (n_loops == 0) return out;
    const auto np = static_cast<std::size_t>(cfg.np_max);
    const auto classes = static_cast<std::size_t>(cfg.num_classes());

    auto memory = nn::gather_rows(tokens, loop_positions);  // F_rho
    auto x = nn::slice_rows(nn::add(ctx["slots.const"], ctx["slots.pos"]), 0, n_loops * np);
    for (const auto& block : loop_blocks) x = block(ctx, x, memory);
    out.slot_features = loop_final_ln(ctx, x);
    auto logits = loop_head(ctx, out.slot_features);  // [slots x 6*classes]
    out.logits_rows = nn::reshape(logits, n_loops * np * 6, classes);

    if (cfg.variant == ModelVariant::Hierarchical) {
      auto probs = nn::reshape(nn::softmax_rows(out.logits_rows), n_loops * np, 6 * classes);
      auto refine_in = nn::concat_cols({out.slot_features, probs});
      out.offsets = refiner(ctx, refine_in);  // [slots x 6]
    }
    return out;
  }

  nn::NodePtr decode_extrusions(nn::ForwardContext& ctx, const nn::NodePtr& tokens,
                                const std::vector<std::size_t>& ext_positions) const {
    if (ext_positions.empty()) return nullptr;
    auto f_e = nn::gather_rows(tokens, ext_positions);
    auto logits = ext_head(ctx, f_e);  // [n_ext x 11*classes]
    return nn::reshape(logits, ext_positions.size() * 11, static_cast<std::size_t>(cfg.num_classes()));
  }

  struct LossResult {
    nn::NodePtr total;
    double type_loss = 0.0;
    double loop_loss = 0.0;
    double ext_loss = 0.0;
    double refine_loss = 0.0;
  };

  // Teacher-forced joint loss: ground-truth types route the embeddings and
  // supply the cross-entropy and offset targets.
  LossResult loss(nn::ForwardContext& ctx, const TrainingExample& ex) const {
    const auto fw = forward_tokens(ctx, ex.points, ex.normals);
    std::vector<nn::NodePtr> terms;
    LossResult out;

    auto type_ce = nn::cross_entropy(fw.type_logits, ex.token_types);
    out.type_loss = type_ce->value.at(0, 0);
    terms.push_back(type_ce);

    std::vector<std::size_t> loop_positions, ext_positions;
    route_positions(ex.token_types, loop_positions, ext_positions);

    if (cfg.variant == ModelVariant::Flat) {
      if (!loop_positions.empty()) {
        auto slot_logits = nn::reshape(
            flat_loop_head(ctx, nn::gather_rows(fw.tokens, loop_positions)),
            loop_positions.size() * static_cast<std::size_t>(cfg.np_max) * 6,
            static_cast<std::size_t>(cfg.num_classes()));
        auto loop_ce = nn::cross_entropy(slot_logits, ex.loop_classes);
        out.loop_loss = loop_ce->value.at(0, 0);
        terms.push_back(loop_ce);
      }
      if (!ext_positions.empty()) {
        auto ext_logits =
            nn::reshape(flat_ext_head(ctx, nn::gather_rows(fw.tokens, ext_positions)),
                        ext_positions.size() * 11, static_cast<std::size_t>(cfg.num_classes()));
        auto ext_ce = nn::cross_entropy(ext_logits, ex.ext_classes);
        out.ext_loss = ext_ce->value.at(0, 0);
        terms.push_back(ext_ce);
      }
      out.total = nn::add_scalar_nodes(terms);
      return out;
    }

    if (!loop_positions.empty()) {
      const auto decode = decode_loops(ctx, fw.tokens, loop_positions);
      auto loop_ce = nn::cross_entropy(decode.logits_rows, ex.loop_classes);
      out.loop_loss = loop_ce->value.at(0, 0);
      terms.push_back(loop_ce);
      if (decode.offsets) {
        nn::Tensor target(loop_positions.size() * static_cast<std::size_t>(cfg.np_max), 6);
        target.data = ex.offsets;
        auto refine_mse = nn::mse(decode.offsets, target, ex.offset_mask);
        out.refine_loss = refine_mse->value.at(0, 0);
        terms.push_back(refine_mse);
      }
    }
    if (!ext_positions.empty()) {
      auto ext_logits = decode_extrusions(ctx, fw.tokens, ext_positions);
      auto ext_ce = nn::cross_entropy(ext_logits, ex.ext_classes);
      out.ext_loss = ext_ce->value.at(0, 0);
      terms.push_back(ext_ce);
    }
    out.total = nn::add_scalar_nodes(terms);
    return out;
  }

  // ---------------------------------------------------------------------
  // Inference: predicted-type routing, argmax decoding, refined continuous
  // loop coordinates. Output validity is measured downstream, not enforced.

  static int argmax_range(const nn::Tensor& t, std::size_t row, std::size_t count) {
    int best = 0;
    double best_v = t.at(row, 0);
    for (std::size_t c = 1; c < count; ++c) {
      if (t.at(row, c) > best_v) {
        best_v = t.at(row, c);
        best = static_cast<int>(c);
      }
    }
    return best;
  }

  CadSequence infer(const PointCloud& cloud) const {
    nn::ForwardContext ctx(params);
    const auto order = canonical_order(cloud.points);
    std::vector<Vec3> points, normals;
    points.reserve(order.size());
    normals.reserve(order.size());
    for (const auto i : order) {
      points.push_back(cloud.points[i]);
      normals.push_back(cloud.normals[i]);
    }
    const auto fw = forward_tokens(ctx, points, normals);

    std::vector<int> types(static_cast<std::size_t>(cfg.l_max));
    for (std::size_t i = 0; i < types.size(); ++i)
      types[i] = argmax_range(fw.type_logits->value, i, 3);
    std::vector<std::size_t> loop_positions, ext_positions;
    route_positions(types, loop_positions, ext_positions);

    const QuantizationSpec spec{cfg.bins};
    const auto classes = static_cast<std::size_t>(cfg.num_classes());

    // decode loops into per-ordinal primitive lists
    std::vector<std::vector<PrimitiveDelta>> loops(loop_positions.size());
    if (!loop_positions.empty()) {
      nn::Tensor logits_rows, offsets;
      if (cfg.variant == ModelVariant::Flat) {
        auto slot_logits = nn::reshape(
            flat_loop_head(ctx, nn::gather_rows(fw.tokens, loop_positions)),
            loop_positions.size() * static_cast<std::size_t>(cfg.np_max) * 6, classes);
        logits_rows = slot_logits->value;
      } else {
        const auto decode = decode_loops(ctx, fw.tokens, loop_positions);
        logits_rows = decode.logits_rows->value;
        if (decode.offsets) offsets = decode.offsets->value;
      }
      for (std::size_t l = 0; l < loop_positions.size(); ++l) {
        for (int s = 0; s < cfg.np_max; ++s) {
          const std::size_t slot = l * static_cast<std::size_t>(cfg.np_max) + static_cast<std::size_t>(s);
          std::array<int, 6> cls{};
          bool all_sentinel = true;
          for (int c = 0; c < 6; ++c) {
            cls[static_cast<std::size_t>(c)] =
                argmax_range(logits_rows, slot * 6 + static_cast<std::size_t>(c), classes);
            all_sentinel = all_sentinel && cls[static_cast<std::size_t>(c)] == spec.sentinel_index();
          }
          if (all_sentinel) continue;  // pad slot
          std::array<double, 6> coords{};
          for (int c = 0; c < 6; ++c) {
            const int k = cls[static_cast<std::size_t>(c)];
            double v = dequantize(k, spec);
            if (k != spec.sentinel_index() && offsets.size() > 0)
              v += offsets.at(slot, static_cast<std::size_t>(c));
            coords[static_cast<std::size_t>(c)] = v;
          }
          loops[l].push_back(PrimitiveDelta{{coords[0], coords[1]},
                                            {coords[2], coords[3]},
                                            {coords[4], coords[5]}});
        }
      }
    }

    // decode extrusions
    std::vector<Extrusion> exts;
    if (!ext_positions.empty()) {
      nn::Tensor logits_rows;
      if (cfg.variant == ModelVariant::Flat) {
        logits_rows = nn::reshape(flat_ext_head(ctx, nn::gather_rows(fw.tokens, ext_positions)),
                                  ext_positions.size() * 11, classes)
                          ->value;
      } else {
        logits_rows = decode_extrusions(ctx, fw.tokens, ext_positions)->value;
      }
      for (std::size_t e = 0; e < ext_positions.size(); ++e) {
        Extrusion ext;
        auto slot_argmax = [&](int slot, std::size_t valid) {
          return argmax_range(logits_rows, e * 11 + static_cast<std::size_t>(slot), valid);
        };
        // continuous slots choose among the bins, categorical slots among
        // their class counts
        for (int i = 0; i < 3; ++i) {
          ext.orientation[static_cast<std::size_t>(i)] =
              dequantize(slot_argmax(i, static_cast<std::size_t>(cfg.bins)), spec);
          ext.origin[static_cast<std::size_t>(i)] =
              dequantize(slot_argmax(3 + i, static_cast<std::size_t>(cfg.bins)), spec);
        }
        ext.scale = dequantize(slot_argmax(6, static_cast<std::size_t>(cfg.bins)), spec);
        ext.distances[0] = dequantize(slot_argmax(7, static_cast<std::size_t>(cfg.bins)), spec);
        ext.distances[1] = dequantize(slot_argmax(8, static_cast<std::size_t>(cfg.bins)), spec);
        ext.boolean_op = static_cast<BooleanOp>(slot_argmax(9, 4));
        ext.extent = static_cast<ExtentType>(slot_argmax(10, 3));
        exts.push_back(ext);
      }
    }

    // reassemble steps from the token order
    CadSequence seq;
    seq.quantization = spec;
    Step current;
    std::size_t loop_cursor = 0, ext_cursor = 0;
    for (const int t : types) {
      if (t == static_cast<int>(TokenType::Eos)) break;
      if (t == static_cast<int>(TokenType::Loop)) {
        Loop loop;
        loop.primitives = loops[loop_cursor++];
        current.loops.push_back(std::move(loop));
      } else {
        current.extrusion = exts[ext_cursor++];
        seq.steps.push_back(std::move(current));
        current = Step{};
      }
    }
    if (!current.loops.empty()) seq.steps.push_back(std::move(current));  // trailing loops
    return seq;
  }
};

}  // namespace transcad
