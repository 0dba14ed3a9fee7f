#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "transcad/nn/autodiff.hpp"
#include "transcad/rng.hpp"

namespace transcad::nn {

// Named parameter registry. Creation order is the canonical order used for
// checkpoints and gradient reduction.
struct ParamStore {
  std::vector<std::string> order;
  std::map<std::string, Tensor> values;

  Tensor& create(const std::string& name, std::size_t rows, std::size_t cols) {
    if (values.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    order.push_back(name);
    return values.emplace(name, Tensor::zeros(rows, cols)).first->second;
  }

  Tensor& at(const std::string& name) { return values.at(name); }
  const Tensor& at(const std::string& name) const { return values.at(name); }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [_, t] : values) n += t.size();
    return n;
  }
};

// Xavier-uniform fill; output heads are zero-initialized by the caller so
// fresh models start from exactly uniform logits.
inline void init_xavier(Tensor& t, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
}

inline void init_uniform(Tensor& t, Rng& rng, double bound) {
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
}

// Per-forward view of the store: parameters become graph leaves on first
// use. After backward(), harvest() returns the leaf gradients.
struct ForwardContext {
  const ParamStore* store = nullptr;
  std::map<std::string, NodePtr> leaves;
  bool train_mode = false;
  double dropout_rate = 0.0;
  Rng* dropout_rng = nullptr;

  explicit ForwardContext(const ParamStore& s) : store(&s) {}

  NodePtr operator[](const std::string& name) {
    auto it = leaves.find(name);
    if (it != leaves.end()) return it->second;
    auto node = leaf(store->at(name));
    leaves.emplace(name, node);
    return node;
  }

  // gradient per touched parameter, in store order
  std::map<std::string, Tensor> harvest() const {
    std::map<std::string, Tensor> grads;
    for (const auto& [name, node] : leaves) {
      if (node->grad.size() > 0) grads[name] = node->grad;
    }
    return grads;
  }
};

// Inverted dropout; identity when the context is not training or the rate
// is zero, so inference and the deterministic test mode are exact.
inline NodePtr dropout(ForwardContext& ctx, const NodePtr& x) {
  if (!ctx.train_mode || ctx.dropout_rate <= 0.0 || ctx.dropout_rng == nullptr) return x;
  const double keep = 1.0 - ctx.dropout_rate;
  Tensor mask(x->value.rows, x->value.cols);
  for (auto& v : mask.data) v = ctx.dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
  auto mask_node = constant(std::move(mask));
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask_node->value.data[i];
  return detail::make_op(std::move(out), {x, mask_node}, [x, mask_node](Node& n) {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i)
      x->grad.data[i] += n.grad.data[i] * mask_node->value.data[i];
  });
}

struct Linear {
  std::string weight;
  std::string bias;

  static Linear create(ParamStore& store, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng, bool zero_init = false) {
    Linear l{name + ".w", name + ".b"};
    Tensor& w = store.create(l.weight, in, out);
    store.create(l.bias, 1, out);
    if (!zero_init) init_xavier(w, rng);
    return l;
  }

  NodePtr operator()(ForwardContext& ctx, const NodePtr& x) const {
    return add_rowvec(matmul(x, ctx[weight]), ctx[bias]);
  }
};

// Affine stack with ReLU between layers and a linear final layer.
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(ParamStore& store, const std::string& name,
                    const std::vector<std::size_t>& dims, Rng& rng,
                    bool zero_init_last = false) {
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      const bool last = i + 2 == dims.size();
      mlp.layers.push_back(Linear::create(store, name + ".fc" + std::to_string(i), dims[i],
                                          dims[i + 1], rng, last && zero_init_last));
    }
    return mlp;
  }

  NodePtr operator()(ForwardContext& ctx, NodePtr x) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](ctx, x);
      if (i + 1 < layers.size()) x = relu(x);
    }
    return x;
  }
};

struct LayerNorm {
  std::string gamma;
  std::string beta;

  static LayerNorm create(ParamStore& store, const std::string& name, std::size_t dim) {
    LayerNorm ln{name + ".g", name + ".b"};
    Tensor& g = store.create(ln.gamma, 1, dim);
    std::fill(g.data.begin(), g.data.end(), 1.0);
    store.create(ln.beta, 1, dim);
    return ln;
  }

  NodePtr operator()(ForwardContext& ctx, const NodePtr& x) const {
    return layer_norm(x, ctx[gamma], ctx[beta]);
  }
};

// Scaled dot-product multi-head attention. Queries come from a [Lq x d]
// stream; keys/values from a [Lkv x d_kv] source (d_kv == d for
// self-attention). No causal mask: decoding is non-autoregressive.
struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int heads = 1;
  int model_dim = 0;

  static MultiHeadAttention create(ParamStore& store, const std::string& name, std::size_t d,
                                   std::size_t d_kv, int heads, Rng& rng) {
    if (d % static_cast<std::size_t>(heads) != 0)
      throw std::invalid_argument("attention: model_dim must divide heads");
    MultiHeadAttention a;
    a.heads = heads;
    a.model_dim = static_cast<int>(d);
    a.wq = Linear::create(store, name + ".q", d, d, rng);
    a.wk = Linear::create(store, name + ".k", d_kv, d, rng);
    a.wv = Linear::create(store, name + ".v", d_kv, d, rng);
    a.wo = Linear::create(store, name + ".o", d, d, rng);
    return a;
  }

  NodePtr operator()(ForwardContext& ctx, const NodePtr& query_stream,
                     const NodePtr& kv_source) const {
    const auto q = wq(ctx, query_stream);
    const auto k = wk(ctx, kv_source);
    const auto v = wv(ctx, kv_source);
    const std::size_t dh = static_cast<std::size_t>(model_dim / heads);
    std::vector<NodePtr> head_outputs;
    for (int h = 0; h < heads; ++h) {
      const std::size_t off = static_cast<std::size_t>(h) * dh;
      const auto qh = slice_cols(q, off, dh);
      const auto kh = slice_cols(k, off, dh);
      const auto vh = slice_cols(v, off, dh);
      auto scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
      auto weights = softmax_rows(scores);
      weights = dropout(ctx, weights);
      head_outputs.push_back(matmul(weights, vh));
    }
    return wo(ctx, concat_cols(head_outputs));
  }
};

// Pre-norm residual decoder block: self-attention over the token stream,
// cross-attention to the memory, position-wise feed-forward.
struct DecoderBlock {
  LayerNorm ln_sa, ln_ca, ln_ff;
  MultiHeadAttention sa, ca;
  Linear ff1, ff2;

  static DecoderBlock create(ParamStore& store, const std::string& name, std::size_t d,
                             std::size_t d_kv, std::size_t ff_dim, int heads, Rng& rng) {
    DecoderBlock b;
    b.ln_sa = LayerNorm::create(store, name + ".ln_sa", d);
    b.ln_ca = LayerNorm::create(store, name + ".ln_ca", d);
    b.ln_ff = LayerNorm::create(store, name + ".ln_ff", d);
    b.sa = MultiHeadAttention::create(store, name + ".sa", d, d, heads, rng);
    b.ca = MultiHeadAttention::create(store, name + ".ca", d, d_kv, heads, rng);
    b.ff1 = Linear::create(store, name + ".ff1", d, ff_dim, rng);
    b.ff2 = Linear::create(store, name + ".ff2", ff_dim, d, rng);
    return b;
  }

  NodePtr operator()(ForwardContext& ctx, NodePtr x, const NodePtr& memory) const {
    const auto sa_in = ln_sa(ctx, x);
    x = add(x, dropout(ctx, sa(ctx, sa_in, sa_in)));
    x = add(x, dropout(ctx, ca(ctx, ln_ca(ctx, x), memory)));
    x = add(x, dropout(ctx, ff2(ctx, relu(ff1(ctx, ln_ff(ctx, x))))));
    return x;
  }
};

// Standalone self-attention block with residual + layer norm, the building
// block contract used by the unit and gradient tests.
struct SelfAttentionBlock {
  LayerNorm ln;
  MultiHeadAttention attn;

  static SelfAttentionBlock create(ParamStore& store, const std::string& name, std::size_t d,
                                   int heads, Rng& rng) {
    SelfAttentionBlock b;
    b.ln = LayerNorm::create(store, name + ".ln", d);
    b.attn = MultiHeadAttention::create(store, name + ".attn", d, d, heads, rng);
    return b;
  }

  NodePtr operator()(ForwardContext& ctx, const NodePtr& x) const {
    const auto normed = ln(ctx, x);
    return add(x, attn(ctx, normed, normed));
  }
};

}  // namespace transcad::nn
