#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "transcad/nn/checkpoint.hpp"
#include "transcad/nn/optim.hpp"

using namespace transcad;
using namespace transcad::nn;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double bound = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

TEST_CASE("matmul matches a hand-rolled chain oracle") {
  Rng rng(1);
  const Tensor a = random_tensor(3, 4, rng);
  const Tensor b = random_tensor(4, 5, rng);
  const Tensor c = random_tensor(5, 2, rng);
  auto na = constant(a), nb = constant(b), nc = constant(c);
  const auto out = matmul(matmul(na, nb), nc)->value;

  // straight-line evaluation
  Tensor expect(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 5; ++l) s += a.at(i, k) * b.at(k, l) * c.at(l, j);
      expect.at(i, j) = s;
    }
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out.data[i] == Catch::Approx(expect.data[i]).margin(1e-12));
}

TEST_CASE("softmax rows sum to one and equal logits are uniform") {
  Tensor logits(2, 5);
  logits.data = {1, 1, 1, 1, 1, 0.3, -2, 5, 0.1, 0.9};
  const auto sm = softmax_rows(constant(logits))->value;
  for (std::size_t c = 0; c < 5; ++c) CHECK(sm.at(0, c) == Catch::Approx(0.2));
  for (std::size_t r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 5; ++c) sum += sm.at(r, c);
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("cross entropy analytic values") {
  Tensor logits(3, 4);  // all zeros: uniform over 4 classes
  auto ce = cross_entropy(constant(logits), {0, 1, 2});
  CHECK(ce->value.at(0, 0) == Catch::Approx(std::log(4.0)));

  // huge correct-class margin drives the loss to zero
  Tensor confident(1, 4);
  confident.data = {50.0, 0.0, 0.0, 0.0};
  auto ce2 = cross_entropy(constant(confident), {0});
  CHECK(ce2->value.at(0, 0) == Catch::Approx(0.0).margin(1e-12));

  // masked rows do not contribute
  auto ce3 = cross_entropy(constant(logits), {0, 1, 2}, {1, 0, 0});
  CHECK(ce3->value.at(0, 0) == Catch::Approx(std::log(4.0)));

  CHECK_THROWS_AS(cross_entropy(constant(logits), {0, 1, 7}), std::out_of_range);
}

TEST_CASE("mse basics") {
  Rng rng(2);
  const Tensor x = random_tensor(4, 3, rng);
  CHECK(mse(constant(x), x)->value.at(0, 0) == 0.0);
  Tensor y = x;
  y.data[0] += 2.0;
  CHECK(mse(constant(x), y)->value.at(0, 0) == Catch::Approx(4.0 / 12.0));
}

TEST_CASE("mlp with zero weights is zero; identity weights are identity") {
  ParamStore store;
  Rng rng(3);
  auto lin = Linear::create(store, "id", 3, 3, rng, /*zero_init=*/true);
  ForwardContext ctx(store);
  const Tensor x = random_tensor(2, 3, rng);
  CHECK(lin(ctx, constant(x))->value == Tensor::zeros(2, 3));

  // identity-initialized single layer
  for (int i = 0; i < 3; ++i) store.at("id.w").at(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
  ForwardContext ctx2(store);
  CHECK(lin(ctx2, constant(x))->value == x);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  ParamStore store;
  Rng rng(4);
  store.create("p", 2, 2);
  store.at("p") = random_tensor(2, 2, rng);
  const Tensor before = store.at("p");
  AdamOptimizer adam;
  std::map<std::string, Tensor> grads{{"p", Tensor::zeros(2, 2)}};
  adam.step(store, grads);
  CHECK(store.at("p") == before);
}

TEST_CASE("adam warmup ramps the learning rate linearly") {
  AdamOptimizer adam;
  adam.lr = 1e-3;
  adam.warmup_steps = 2000;
  CHECK(adam.effective_lr(1) == Catch::Approx(1e-3 / 2000.0));
  CHECK(adam.effective_lr(1000) == Catch::Approx(5e-4));
  CHECK(adam.effective_lr(2000) == Catch::Approx(1e-3));
  CHECK(adam.effective_lr(9999) == Catch::Approx(1e-3));
}

TEST_CASE("adam approaches sign descent under constant gradients") {
  ParamStore store;
  store.create("p", 1, 2);
  store.at("p").data = {1.0, -1.0};
  AdamOptimizer adam;
  adam.warmup_steps = 0;
  adam.lr = 0.01;
  Tensor g(1, 2);
  g.data = {0.5, -2.0};
  std::map<std::string, Tensor> grads{{"p", g}};
  for (int i = 0; i < 200; ++i) adam.step(store, grads);
  // update direction settles to -sign(g) * lr per step
  const Tensor snapshot = store.at("p");
  adam.step(store, grads);
  CHECK(store.at("p").data[0] - snapshot.data[0] == Catch::Approx(-0.01).epsilon(1e-3));
  CHECK(store.at("p").data[1] - snapshot.data[1] == Catch::Approx(0.01).epsilon(1e-3));
}

TEST_CASE("grad check: quadratic is exact to machine precision") {
  ParamStore store;
  Rng rng(5);
  store.create("x", 1, 8);
  store.at("x") = random_tensor(1, 8, rng);
  const double err = grad_check(
      [](ForwardContext& ctx) {
        auto x = ctx["x"];
        return mse(x, Tensor::zeros(1, 8));
      },
      store, 8, 1e-5, 11);
  CHECK(err <= 1e-8);
}

TEST_CASE("grad check: every core layer stays under 1e-4") {
  Rng rng(6);

  SECTION("linear + relu mlp") {
    ParamStore store;
    auto mlp = Mlp::create(store, "mlp", {5, 7, 4}, rng);
    const Tensor x = random_tensor(3, 5, rng);
    const Tensor target = random_tensor(3, 4, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) { return mse(mlp(ctx, constant(x)), target); }, store, 40, 1e-5,
        21);
    CHECK(err <= 1e-4);
  }

  SECTION("layer norm") {
    ParamStore store;
    auto ln = LayerNorm::create(store, "ln", 6);
    Rng r2(7);
    nn::init_uniform(store.at("ln.g"), r2, 0.5);
    for (auto& v : store.at("ln.g").data) v += 1.0;
    nn::init_uniform(store.at("ln.b"), r2, 0.5);
    auto w = Linear::create(store, "w", 6, 6, r2);
    const Tensor x = random_tensor(4, 6, rng);
    const Tensor target = random_tensor(4, 6, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) { return mse(ln(ctx, w(ctx, constant(x))), target); }, store, 40,
        1e-5, 22);
    CHECK(err <= 1e-4);
  }

  SECTION("self attention block") {
    ParamStore store;
    auto block = SelfAttentionBlock::create(store, "sa", 8, 2, rng);
    const Tensor x = random_tensor(5, 8, rng);
    const Tensor target = random_tensor(5, 8, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) { return mse(block(ctx, constant(x)), target); }, store, 48, 1e-5,
        23);
    CHECK(err <= 1e-4);
  }

  SECTION("cross attention decoder block") {
    ParamStore store;
    auto block = DecoderBlock::create(store, "dec", 8, 6, 16, 2, rng);
    const Tensor x = random_tensor(4, 8, rng);
    const Tensor memory = random_tensor(7, 6, rng);
    const Tensor target = random_tensor(4, 8, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) {
          return mse(block(ctx, constant(x), constant(memory)), target);
        },
        store, 48, 1e-5, 24);
    CHECK(err <= 1e-4);
  }

  SECTION("cross entropy over an mlp") {
    ParamStore store;
    auto mlp = Mlp::create(store, "mlp", {6, 12, 5}, rng);
    const Tensor x = random_tensor(4, 6, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) {
          return cross_entropy(mlp(ctx, constant(x)), {0, 2, 4, 1});
        },
        store, 40, 1e-5, 25);
    CHECK(err <= 1e-4);
  }

  SECTION("gather, concat, maxpool composite") {
    ParamStore store;
    auto lin = Linear::create(store, "lin", 6, 4, rng);
    const Tensor x = random_tensor(6, 3, rng);
    const Tensor target = random_tensor(2, 4, rng);
    const double err = grad_check(
        [&](ForwardContext& ctx) {
          auto base = constant(x);
          auto gathered = gather_rows(base, {0, 2, 4, 1, 3, 5});
          auto joined = concat_cols({gathered, gather_rows(base, {5, 4, 3, 2, 1, 0})});
          auto mapped = relu(lin(ctx, joined));
          auto pooled = maxpool_groups(mapped, {0, 3, 6});
          return mse(pooled, target);
        },
        store, 30, 1e-5, 26);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("attention structure properties") {
  Rng rng(8);
  ParamStore store;
  auto attn = MultiHeadAttention::create(store, "a", 8, 8, 2, rng);

  SECTION("single query with identity projections returns input + value") {
    // force identity projections
    for (const char* name : {"a.q.w", "a.k.w", "a.v.w", "a.o.w"}) {
      auto& w = store.at(name);
      std::fill(w.data.begin(), w.data.end(), 0.0);
      for (std::size_t i = 0; i < 8; ++i) w.at(i, i) = 1.0;
    }
    const Tensor x = random_tensor(1, 8, rng);
    ForwardContext ctx(store);
    auto node = constant(x);
    const auto out = attn(ctx, node, node)->value;
    // one key: softmax weight is exactly 1, so the output is the value row
    for (std::size_t c = 0; c < 8; ++c)
      CHECK(out.at(0, c) == Catch::Approx(x.at(0, c)).margin(1e-12));

    // with the residual block, output = input + value of the normalized input
    ParamStore store2;
    Rng r3(10);
    auto block = SelfAttentionBlock::create(store2, "blk", 8, 2, r3);
    for (const char* name : {"blk.attn.q.w", "blk.attn.k.w", "blk.attn.v.w", "blk.attn.o.w"}) {
      auto& w = store2.at(name);
      std::fill(w.data.begin(), w.data.end(), 0.0);
      for (std::size_t i = 0; i < 8; ++i) w.at(i, i) = 1.0;
    }
    ForwardContext bctx(store2);
    auto ln = LayerNorm{"blk.ln.g", "blk.ln.b"};
    const auto value_row = ln(bctx, constant(x))->value;
    ForwardContext bctx2(store2);
    const auto block_out = block(bctx2, constant(x))->value;
    for (std::size_t c = 0; c < 8; ++c)
      CHECK(block_out.at(0, c) == Catch::Approx(x.at(0, c) + value_row.at(0, c)).margin(1e-12));
  }

  SECTION("permutation of key/value rows leaves the output unchanged") {
    const Tensor q = random_tensor(3, 8, rng);
    Tensor kv = random_tensor(6, 8, rng);
    ForwardContext ctx(store);
    const auto base = attn(ctx, constant(q), constant(kv))->value;

    Tensor shuffled(6, 8);
    const std::size_t perm[6] = {4, 2, 0, 5, 1, 3};
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 8; ++c) shuffled.at(r, c) = kv.at(perm[r], c);
    ForwardContext ctx2(store);
    const auto permuted = attn(ctx2, constant(q), constant(shuffled))->value;
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(base.data[i] == Catch::Approx(permuted.data[i]).margin(1e-9));
  }

  SECTION("duplicating key/value rows leaves the output unchanged") {
    const Tensor q = random_tensor(3, 8, rng);
    const Tensor kv = random_tensor(5, 8, rng);
    ForwardContext ctx(store);
    const auto base = attn(ctx, constant(q), constant(kv))->value;

    Tensor doubled(10, 8);
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t c = 0; c < 8; ++c) doubled.at(r, c) = kv.at(r % 5, c);
    ForwardContext ctx2(store);
    const auto dup = attn(ctx2, constant(q), constant(doubled))->value;
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(base.data[i] == Catch::Approx(dup.data[i]).margin(1e-6));
  }
}

TEST_CASE("checkpoint round trip is bit identical") {
  ParamStore store;
  Rng rng(9);
  store.create("a", 3, 4);
  store.at("a") = random_tensor(3, 4, rng);
  store.create("b", 1, 7);
  store.at("b") = random_tensor(1, 7, rng);
  const std::string path = "ckpt_test.bin";
  save_checkpoint(store, {{"note", "test"}}, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.params.order == store.order);
  CHECK(loaded.params.at("a") == store.at("a"));
  CHECK(loaded.params.at("b") == store.at("b"));
  CHECK(loaded.meta.at("note") == "test");
  std::remove(path.c_str());
}
