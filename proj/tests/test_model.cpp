#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "transcad/generator.hpp"
#include "transcad/metrics.hpp"
#include "transcad/model/train.hpp"
#include "transcad/surface_sampler.hpp"

using namespace transcad;

namespace {

// small config for fast structural tests
ModelConfig tiny_config() {
  ModelConfig c = ModelConfig::toy();
  c.n_points = 64;
  c.d_z = 16;
  c.heads = 2;
  c.ff_dim = 16;
  c.decoder_blocks = 2;
  c.type_head_hidden = 16;
  c.ext_head_hidden = 16;
  c.refiner_hidden = 24;
  c.levels = {{32, 0.3, 8, 16}, {16, 0.6, 8, 16}, {8, 1.2, 8, 16}, {4, 2.4, 4, 16}};
  return c;
}

TrainingExample example_for_seed(std::uint64_t seed, const ModelConfig& cfg) {
  const auto seq = generate_random_sequence(seed);
  const auto cloud = sample_surface(seq, cfg.n_points, derive_seed(seed, 0xc10dULL));
  return make_training_example(cloud, seq, cfg);
}

}  // namespace

TEST_CASE("both presets build consistent parameter sets") {
  const auto toy = TransCadNet::create(ModelConfig::toy(), 1);
  CHECK(toy.params.total_size() > 100000);
  const auto paper = TransCadNet::create(ModelConfig::paper(), 1);
  CHECK(paper.params.total_size() > toy.params.total_size());
  // misconfigured encoder/feature widths are rejected
  ModelConfig bad = ModelConfig::toy();
  bad.d_p = 24;
  CHECK_THROWS_AS(TransCadNet::create(bad, 1), Error);
}

TEST_CASE("encoder output shape follows the schedule") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 1);
  const auto ex = example_for_seed(3, cfg);
  nn::ForwardContext ctx(net.params);
  const auto fw = net.forward_tokens(ctx, ex.points, ex.normals);
  CHECK(fw.point_features->value.rows == 4);   // last level point count
  CHECK(fw.point_features->value.cols == 16);  // d_p
  CHECK(fw.type_logits->value.rows == static_cast<std::size_t>(cfg.l_max));
  CHECK(fw.type_logits->value.cols == 3);
}

TEST_CASE("toy preset encoder yields 16 x d_p point features") {
  const auto cfg = ModelConfig::toy();
  auto net = TransCadNet::create(cfg, 1);
  const auto ex = example_for_seed(1, cfg);
  nn::ForwardContext ctx(net.params);
  const auto features = net.encoder(ctx, ex.points, ex.normals);
  CHECK(features->value.rows == 16);
  CHECK(features->value.cols == static_cast<std::size_t>(cfg.d_p));
}

TEST_CASE("encoder is invariant to input point order") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 2);
  const auto ex = example_for_seed(5, cfg);

  PointCloud cloud;
  cloud.points = ex.points;
  cloud.normals = ex.normals;
  // a permuted copy of the same cloud
  PointCloud shuffled;
  Rng rng(9);
  std::vector<std::size_t> perm(cloud.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  for (const auto i : perm) {
    shuffled.points.push_back(cloud.points[i]);
    shuffled.normals.push_back(cloud.normals[i]);
  }

  const auto seq_a = net.infer(cloud);
  const auto seq_b = net.infer(shuffled);
  CHECK(serialize(seq_a) == serialize(seq_b));
}

TEST_CASE("degenerate constant cloud still encodes finite features") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 3);
  std::vector<Vec3> points(static_cast<std::size_t>(cfg.n_points), Vec3{0.1, 0.2, 0.3});
  std::vector<Vec3> normals(static_cast<std::size_t>(cfg.n_points), Vec3{0, 0, 1});
  nn::ForwardContext ctx(net.params);
  const auto fw = net.forward_tokens(ctx, points, normals);
  for (const double v : fw.point_features->value.data) CHECK(std::isfinite(v));
}

TEST_CASE("zero-initialized heads start at the uniform-logit loss") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 4);
  const auto ex = example_for_seed(7, cfg);
  nn::ForwardContext ctx(net.params);
  const auto loss = net.loss(ctx, ex);
  CHECK(loss.type_loss == Catch::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(loss.loop_loss == Catch::Approx(std::log(257.0)).epsilon(1e-9));
  CHECK(loss.ext_loss == Catch::Approx(std::log(257.0)).epsilon(1e-9));
  // zero-initialized refiner predicts zero offsets; targets are half-step bounded
  CHECK(loss.refine_loss <= std::pow(1.0 / 510.0, 2.0) + 1e-12);
  const double total = loss.total->value.at(0, 0);
  CHECK(total == Catch::Approx(loss.type_loss + loss.loop_loss + loss.ext_loss +
                               loss.refine_loss)
                     .margin(1e-12));
}

TEST_CASE("offset targets never exceed the quantization half-step") {
  const auto cfg = tiny_config();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ex = example_for_seed(seed, cfg);
    for (std::size_t i = 0; i < ex.offsets.size(); ++i) {
      if (ex.offset_mask[i]) CHECK(std::abs(ex.offsets[i]) <= 1.0 / 510.0 + 1e-15);
    }
  }
}

TEST_CASE("route_positions splits by type and truncates at EOS") {
  std::vector<int> types{0, 0, 1, 2, 0, 1};  // L L E EOS (rest ignored)
  std::vector<std::size_t> loops, exts;
  TransCadNet::route_positions(types, loops, exts);
  CHECK(loops == std::vector<std::size_t>{0, 1});
  CHECK(exts == std::vector<std::size_t>{2});

  std::vector<int> all_eos{2, 2, 2};
  TransCadNet::route_positions(all_eos, loops, exts);
  CHECK(loops.empty());
  CHECK(exts.empty());
}

TEST_CASE("inference reconstructs steps from the token stream") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 5);
  const auto ex = example_for_seed(11, cfg);
  PointCloud cloud;
  cloud.points = ex.points;
  cloud.normals = ex.normals;
  const auto seq = net.infer(cloud);
  // fresh zero-headed nets predict uniform types -> argmax is type 0 (Loop)
  // for every position, so the sequence has loops and no extrusions
  const auto report = validate(seq);
  CHECK_FALSE(report.valid);
  // inference is deterministic
  CHECK(serialize(net.infer(cloud)) == serialize(seq));
}

TEST_CASE("training checkpoints round trip bit-identically") {
  const auto cfg = tiny_config();
  auto net = TransCadNet::create(cfg, 6);
  std::vector<TrainingExample> data{example_for_seed(1, cfg), example_for_seed(2, cfg)};
  TrainOptions opt;
  opt.steps = 5;
  opt.batch_size = 2;
  opt.warmup_steps = 10;
  opt.seed = 3;
  opt.threads = 1;
  train(net, data, opt);
  const std::string path = "model_test.ckpt";
  save_model(net, path);
  const auto loaded = load_model(path);
  CHECK(loaded.params.order == net.params.order);
  for (const auto& name : net.params.order)
    CHECK(loaded.params.at(name) == net.params.at(name));
  std::remove(path.c_str());
}

TEST_CASE("training is deterministic and thread-count independent") {
  const auto cfg = tiny_config();
  std::vector<TrainingExample> data;
  for (std::uint64_t s = 0; s < 4; ++s) data.push_back(example_for_seed(s, cfg));

  auto run = [&](int threads) {
    auto net = TransCadNet::create(cfg, 7);
    TrainOptions opt;
    opt.steps = 8;
    opt.batch_size = 4;
    opt.warmup_steps = 10;
    opt.seed = 9;
    opt.threads = threads;
    train(net, data, opt);
    return net;
  };
  const auto a = run(1);
  const auto b = run(4);
  for (const auto& name : a.params.order) CHECK(a.params.at(name) == b.params.at(name));
}

TEST_CASE("a tiny model memorizes a single sample") {
  auto cfg = tiny_config();
  cfg.d_z = 32;
  cfg.refiner_hidden = 64;
  auto net = TransCadNet::create(cfg, 8);
  std::vector<TrainingExample> data{example_for_seed(42, cfg)};
  TrainOptions opt;
  opt.steps = 250;
  opt.batch_size = 1;
  opt.warmup_steps = 20;
  opt.seed = 1;
  opt.lr = 2e-3;
  const auto result = train(net, data, opt);
  CHECK(result.curve.back().total < result.curve.front().total / 10.0);

  PointCloud cloud;
  cloud.points = data[0].points;
  cloud.normals = data[0].normals;
  const auto pred = net.infer(cloud);
  const auto gt_tokens = tokenize(data[0].sequence, cfg.l_max);
  const auto pred_tokens = tokenize(pred, cfg.l_max);
  CHECK(f1_token_types(pred_tokens, gt_tokens) >= 0.95);
  CHECK(csss(pred, data[0].sequence).total >= 0.8);
}

TEST_CASE("flat variant trains and infers under the same harness") {
  auto cfg = tiny_config();
  cfg.variant = ModelVariant::Flat;
  auto net = TransCadNet::create(cfg, 10);
  std::vector<TrainingExample> data{example_for_seed(4, cfg)};
  TrainOptions opt;
  opt.steps = 5;
  opt.batch_size = 1;
  opt.warmup_steps = 5;
  opt.seed = 2;
  const auto result = train(net, data, opt);
  CHECK(result.curve.size() == 5);
  PointCloud cloud;
  cloud.points = data[0].points;
  cloud.normals = data[0].normals;
  (void)net.infer(cloud);  // must not throw
}

TEST_CASE("end-to-end gradient check on a 2-token toy model") {
  ModelConfig cfg = tiny_config();
  cfg.n_points = 32;
  cfg.d_p = 8;
  cfg.d_z = 8;
  cfg.heads = 2;
  cfg.ff_dim = 8;
  cfg.decoder_blocks = 1;
  cfg.l_max = 4;
  cfg.np_max = 2;
  cfg.type_head_hidden = 8;
  cfg.ext_head_hidden = 8;
  cfg.refiner_hidden = 8;
  cfg.levels = {{16, 0.5, 4, 8}, {8, 1.0, 4, 8}, {4, 2.0, 4, 8}, {2, 4.0, 2, 8}};

  // one circle loop + one extrusion: tokens [L, E, EOS, EOS]
  CadSequence seq;
  Step step;
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::circle({0.5, 0.5}, 0.3));
  step.loops.push_back(loop);
  Extrusion e;
  e.orientation = {0.5, 0.5, 0.5};
  e.origin = {0.5, 0.5, 0.5};
  e.scale = 0.4;
  e.distances = {0.6, 0.0};
  step.extrusion = e;
  seq.steps.push_back(step);
  const auto cloud = sample_surface(seq, cfg.n_points, 17);
  const auto ex = make_training_example(cloud, seq, cfg);

  auto net = TransCadNet::create(cfg, 12);
  // move the zero heads off their saddle so gradients are informative
  Rng rng(13);
  for (const auto& name : net.params.order) {
    auto& t = net.params.at(name);
    for (auto& v : t.data) v += rng.uniform(-0.02, 0.02);
  }
  const double err = nn::grad_check(
      [&](nn::ForwardContext& ctx) { return net.loss(ctx, ex).total; }, net.params, 32, 1e-5, 33);
  CHECK(err <= 1e-3);
}
