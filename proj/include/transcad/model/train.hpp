#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/model/network.hpp"
#include "transcad/nn/checkpoint.hpp"
#include "transcad/nn/optim.hpp"

namespace transcad {

struct TrainOptions {
  int steps = 2000;
  int batch_size = 8;
  double lr = 1e-3;
  int warmup_steps = 100;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: one per batch sample up to hardware_concurrency
};

struct LossRecord {
  int step = 0;
  double total = 0.0;
  double type_loss = 0.0;
  double loop_loss = 0.0;
  double ext_loss = 0.0;
  double refine_loss = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> curve;
};

inline void write_loss_curve(const std::vector<LossRecord>& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "step,total,L_type,L_loop,L_ext,L_refine\n";
  char buf[256];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.step, r.total, r.type_loss,
                  r.loop_loss, r.ext_loss, r.refine_loss);
    out << buf;
  }
}

// Deterministic training loop: seeded shuffling, per-sample graphs evaluated
// (possibly in parallel) and reduced in sample order, Adam with linear
// warm-up. Identical seeds and options yield bit-identical checkpoints
// regardless of thread count.
inline TrainResult train(TransCadNet& net, const std::vector<TrainingExample>& dataset,
                         const TrainOptions& opt, std::ostream* log = nullptr) {
  if (dataset.empty()) throw Error("train: empty dataset");
  nn::AdamOptimizer adam;
  adam.lr = opt.lr;
  adam.warmup_steps = opt.warmup_steps;

  Rng shuffle_rng(derive_seed(opt.seed, 0x7121ULL));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = dataset.size();  // trigger reshuffle on first use

  TrainResult result;
  result.curve.reserve(static_cast<std::size_t>(opt.steps));

  int worker_count = opt.threads > 0 ? opt.threads
                                     : static_cast<int>(std::min<std::size_t>(
                                           std::thread::hardware_concurrency() > 0
                                               ? std::thread::hardware_concurrency()
                                               : 1,
                                           static_cast<std::size_t>(opt.batch_size)));
  worker_count = std::max(1, worker_count);

  for (int step = 1; step <= opt.steps; ++step) {
    std::vector<std::size_t> batch;
    for (int b = 0; b < opt.batch_size; ++b) {
      if (cursor >= order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }

    struct SampleOut {
      std::map<std::string, nn::Tensor> grads;
      LossRecord record;
    };
    std::vector<SampleOut> outputs(batch.size());
    auto run_sample = [&](std::size_t bi) {
      nn::ForwardContext ctx(net.params);
      ctx.train_mode = true;
      ctx.dropout_rate = net.cfg.dropout;
      Rng drop_rng(derive_seed(opt.seed, 0xd201ULL + static_cast<std::uint64_t>(step) * 131 +
                                             static_cast<std::uint64_t>(bi)));
      ctx.dropout_rng = &drop_rng;
      const auto loss = net.loss(ctx, dataset[batch[bi]]);
      nn::backward(loss.total);
      outputs[bi].grads = ctx.harvest();
      outputs[bi].record.total = loss.total->value.at(0, 0);
      outputs[bi].record.type_loss = loss.type_loss;
      outputs[bi].record.loop_loss = loss.loop_loss;
      outputs[bi].record.ext_loss = loss.ext_loss;
      outputs[bi].record.refine_loss = loss.refine_loss;
    };

    if (worker_count <= 1 || batch.size() <= 1) {
      for (std::size_t bi = 0; bi < batch.size(); ++bi) run_sample(bi);
    } else {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      for (int w = 0; w < worker_count; ++w) {
        pool.emplace_back([&]() {
          while (true) {
            const std::size_t bi = next.fetch_add(1);
            if (bi >= batch.size()) break;
            run_sample(bi);
          }
        });
      }
      for (auto& t : pool) t.join();
    }

    // reduce per-sample gradients in batch order, then average
    std::map<std::string, nn::Tensor> grads;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& out : outputs) {
      for (const auto& [name, g] : out.grads) {
        auto it = grads.find(name);
        if (it == grads.end()) {
          grads[name] = g;
        } else {
          nn::axpy(it->second, 1.0, g);
        }
      }
    }
    for (auto& [name, g] : grads)
      for (auto& v : g.data) v *= inv_batch;

    LossRecord rec;
    rec.step = step;
    for (const auto& out : outputs) {
      rec.total += out.record.total * inv_batch;
      rec.type_loss += out.record.type_loss * inv_batch;
      rec.loop_loss += out.record.loop_loss * inv_batch;
      rec.ext_loss += out.record.ext_loss * inv_batch;
      rec.refine_loss += out.record.refine_loss * inv_batch;
    }
    if (!std::isfinite(rec.total)) throw Error("train: loss diverged (NaN/inf) at step " +
                                               std::to_string(step));
    result.curve.push_back(rec);
    if (log && (step % 100 == 0 || step == 1))
      (*log) << "step " << step << " loss " << rec.total << "\n";

    adam.step(net.params, grads);
  }
  return result;
}

inline void save_model(const TransCadNet& net, const std::string& path) {
  nlohmann::json meta;
  meta["config"] = net.cfg.to_json();
  nn::save_checkpoint(net.params, meta, path);
}

inline TransCadNet load_model(const std::string& path) {
  auto ck = nn::load_checkpoint(path);
  if (!ck.meta.contains("config"))
    throw ParseError(path + ": checkpoint manifest lacks a config echo");
  const auto cfg = ModelConfig::from_json(ck.meta.at("config"));
  TransCadNet net = TransCadNet::create(cfg, 0);
  if (net.params.order != ck.params.order)
    throw ParseError(path + ": checkpoint parameter set does not match the config");
  for (const auto& name : net.params.order) {
    const auto& src = ck.params.at(name);
    auto& dst = net.params.at(name);
    if (!dst.same_shape(src)) throw ParseError(path + ": shape mismatch for " + name);
    dst = src;
  }
  return net;
}

}  // namespace transcad
