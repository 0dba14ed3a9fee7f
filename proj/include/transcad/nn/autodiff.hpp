#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "transcad/nn/tensor.hpp"

namespace transcad::nn {

// Reverse-mode autodiff over Tensor values. Each forward pass builds a fresh
// graph of shared Node objects; backward() runs a topological sweep. Graphs
// from different samples share nothing, so building and differentiating them
// in parallel threads is safe.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // scatters this->grad into parents

  explicit Node(Tensor v, bool req = false) : value(std::move(v)), requires_grad(req) {}

  void ensure_grad() {
    if (grad.rows != value.rows || grad.cols != value.cols)
      grad = Tensor::zeros(value.rows, value.cols);
  }
};

inline NodePtr constant(Tensor v) { return std::make_shared<Node>(std::move(v), false); }

inline NodePtr leaf(Tensor v) { return std::make_shared<Node>(std::move(v), true); }

namespace detail {

inline NodePtr make_op(Tensor value, std::vector<NodePtr> parents,
                       std::function<void(Node&)> backprop) {
  bool req = false;
  for (const auto& p : parents) req = req || p->requires_grad;
  auto node = std::make_shared<Node>(std::move(value), req);
  if (req) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

inline void topo_sort(const NodePtr& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, child] = stack.back();
    if (child < node->parents.size()) {
      Node* next = node->parents[child].get();
      ++child;
      if (next->requires_grad && visited.insert(next).second) stack.push_back({next, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace detail

// Seeds the root gradient with ones and propagates to every reachable leaf.
inline void backward(const NodePtr& root) {
  std::vector<Node*> order;
  detail::topo_sort(root, order);
  for (Node* n : order) n->ensure_grad();
  Node* r = root.get();
  std::fill(r->grad.data.begin(), r->grad.data.end(), 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      for (auto& p : n->parents) p->ensure_grad();
      n->backprop(*n);
    }
  }
}

// ---------------------------------------------------------------------------
// ops

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  if (a->value.cols != b->value.rows) throw std::invalid_argument("matmul: inner dims differ");
  Tensor out(a->value.rows, b->value.cols);
  matmul_acc(a->value, b->value, out);
  return detail::make_op(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) matmul_bt_acc(n.grad, b->value, a->grad);
    if (b->requires_grad) matmul_at_acc(a->value, n.grad, b->grad);
  });
}

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = a->value;
  axpy(out, 1.0, b->value);
  return detail::make_op(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) axpy(a->grad, 1.0, n.grad);
    if (b->requires_grad) axpy(b->grad, 1.0, n.grad);
  });
}

inline NodePtr sub(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
  Tensor out = a->value;
  axpy(out, -1.0, b->value);
  return detail::make_op(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) axpy(a->grad, 1.0, n.grad);
    if (b->requires_grad) axpy(b->grad, -1.0, n.grad);
  });
}

// broadcast a [1 x C] row over every row of a
inline NodePtr add_rowvec(const NodePtr& a, const NodePtr& bias) {
  if (bias->value.rows != 1 || bias->value.cols != a->value.cols)
    throw std::invalid_argument("add_rowvec: bias must be [1 x cols]");
  Tensor out = a->value;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) += bias->value.at(0, c);
  return detail::make_op(std::move(out), {a, bias}, [a, bias](Node& n) {
    if (a->requires_grad) axpy(a->grad, 1.0, n.grad);
    if (bias->requires_grad) {
      for (std::size_t r = 0; r < n.grad.rows; ++r)
        for (std::size_t c = 0; c < n.grad.cols; ++c) bias->grad.at(0, c) += n.grad.at(r, c);
    }
  });
}

inline NodePtr scale(const NodePtr& a, double s) {
  Tensor out = a->value;
  for (auto& v : out.data) v *= s;
  return detail::make_op(std::move(out), {a}, [a, s](Node& n) {
    if (a->requires_grad) axpy(a->grad, s, n.grad);
  });
}

inline NodePtr relu(const NodePtr& a) {
  Tensor out = a->value;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return detail::make_op(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i)
      if (a->value.data[i] > 0.0) a->grad.data[i] += n.grad.data[i];
  });
}

// numerically stable row softmax
inline NodePtr softmax_rows(const NodePtr& a) {
  Tensor out = a->value;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < out.cols; ++c) mx = std::max(mx, out.at(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < out.cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) /= sum;
  }
  return detail::make_op(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    // dx = y * (dy - sum(dy * y)) per row
    for (std::size_t r = 0; r < n.value.rows; ++r) {
      double dsum = 0.0;
      for (std::size_t c = 0; c < n.value.cols; ++c) dsum += n.grad.at(r, c) * n.value.at(r, c);
      for (std::size_t c = 0; c < n.value.cols; ++c)
        a->grad.at(r, c) += n.value.at(r, c) * (n.grad.at(r, c) - dsum);
    }
  });
}

// per-row layer normalization with learned gain/offset ([1 x C] each)
inline NodePtr layer_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                          double eps = 1e-5) {
  const std::size_t R = x->value.rows, C = x->value.cols;
  if (gamma->value.cols != C || beta->value.cols != C)
    throw std::invalid_argument("layer_norm: gain/offset must be [1 x cols]");
  Tensor out(R, C);
  Tensor xhat(R, C);
  std::vector<double> inv_sigma(R);
  for (std::size_t r = 0; r < R; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < C; ++c) mean += x->value.at(r, c);
    mean /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = x->value.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(C);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (std::size_t c = 0; c < C; ++c) {
      xhat.at(r, c) = (x->value.at(r, c) - mean) * is;
      out.at(r, c) = xhat.at(r, c) * gamma->value.at(0, c) + beta->value.at(0, c);
    }
  }
  auto xhat_ptr = std::make_shared<Tensor>(std::move(xhat));
  auto is_ptr = std::make_shared<std::vector<double>>(std::move(inv_sigma));
  return detail::make_op(
      std::move(out), {x, gamma, beta}, [x, gamma, beta, xhat_ptr, is_ptr](Node& n) {
        const std::size_t R = n.value.rows, C = n.value.cols;
        for (std::size_t r = 0; r < R; ++r) {
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const double dy = n.grad.at(r, c);
            const double dxhat = dy * gamma->value.at(0, c);
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat_ptr->at(r, c);
            if (gamma->requires_grad) gamma->grad.at(0, c) += dy * xhat_ptr->at(r, c);
            if (beta->requires_grad) beta->grad.at(0, c) += dy;
          }
          if (!x->requires_grad) continue;
          const double is = (*is_ptr)[r];
          for (std::size_t c = 0; c < C; ++c) {
            const double dxhat = n.grad.at(r, c) * gamma->value.at(0, c);
            x->grad.at(r, c) += is * (dxhat - (sum_dxhat + xhat_ptr->at(r, c) * sum_dxhat_xhat) /
                                                  static_cast<double>(C));
          }
        }
      });
}

inline NodePtr transpose(const NodePtr& a) {
  Tensor out(a->value.cols, a->value.rows);
  for (std::size_t r = 0; r < a->value.rows; ++r)
    for (std::size_t c = 0; c < a->value.cols; ++c) out.at(c, r) = a->value.at(r, c);
  return detail::make_op(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t r = 0; r < n.grad.rows; ++r)
      for (std::size_t c = 0; c < n.grad.cols; ++c) a->grad.at(c, r) += n.grad.at(r, c);
  });
}

inline NodePtr slice_cols(const NodePtr& a, std::size_t start, std::size_t count) {
  if (start + count > a->value.cols) throw std::invalid_argument("slice_cols: out of range");
  Tensor out(a->value.rows, count);
  for (std::size_t r = 0; r < a->value.rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out.at(r, c) = a->value.at(r, start + c);
  return detail::make_op(std::move(out), {a}, [a, start, count](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t r = 0; r < n.grad.rows; ++r)
      for (std::size_t c = 0; c < count; ++c) a->grad.at(r, start + c) += n.grad.at(r, c);
  });
}

inline NodePtr slice_rows(const NodePtr& a, std::size_t start, std::size_t count) {
  if (start + count > a->value.rows) throw std::invalid_argument("slice_rows: out of range");
  Tensor out(count, a->value.cols);
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < a->value.cols; ++c) out.at(r, c) = a->value.at(start + r, c);
  return detail::make_op(std::move(out), {a}, [a, start, count](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t c = 0; c < n.grad.cols; ++c) a->grad.at(start + r, c) += n.grad.at(r, c);
  });
}

inline NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  std::size_t total = 0;
  for (const auto& p : parts) total += p->value.cols;
  Tensor out(parts.front()->value.rows, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p->value.rows; ++r)
      for (std::size_t c = 0; c < p->value.cols; ++c) out.at(r, offset + c) = p->value.at(r, c);
    offset += p->value.cols;
  }
  return detail::make_op(std::move(out), parts, [parts](Node& n) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        for (std::size_t r = 0; r < p->value.rows; ++r)
          for (std::size_t c = 0; c < p->value.cols; ++c)
            p->grad.at(r, c) += n.grad.at(r, offset + c);
      }
      offset += p->value.cols;
    }
  });
}

inline NodePtr concat_rows(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  std::size_t total = 0;
  for (const auto& p : parts) total += p->value.rows;
  Tensor out(total, parts.front()->value.cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p->value.rows; ++r)
      for (std::size_t c = 0; c < p->value.cols; ++c) out.at(offset + r, c) = p->value.at(r, c);
    offset += p->value.rows;
  }
  return detail::make_op(std::move(out), parts, [parts](Node& n) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        for (std::size_t r = 0; r < p->value.rows; ++r)
          for (std::size_t c = 0; c < p->value.cols; ++c)
            p->grad.at(r, c) += n.grad.at(offset + r, c);
      }
      offset += p->value.rows;
    }
  });
}

// Row-major reinterpretation; the flat data order is unchanged.
inline NodePtr reshape(const NodePtr& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a->value.size()) throw std::invalid_argument("reshape: size mismatch");
  Tensor out(rows, cols);
  out.data = a->value.data;
  return detail::make_op(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t i = 0; i < n.grad.data.size(); ++i) a->grad.data[i] += n.grad.data[i];
  });
}

inline NodePtr gather_rows(const NodePtr& a, std::vector<std::size_t> indices) {
  Tensor out(indices.size(), a->value.cols);
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (std::size_t c = 0; c < a->value.cols; ++c) out.at(r, c) = a->value.at(indices[r], c);
  return detail::make_op(std::move(out), {a}, [a, indices = std::move(indices)](Node& n) {
    if (!a->requires_grad) return;
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t c = 0; c < n.grad.cols; ++c)
        a->grad.at(indices[r], c) += n.grad.at(r, c);
  });
}

// Row-group max pool: rows [offsets[g], offsets[g+1]) reduce to one output
// row per group. Gradients flow to the argmax row (first index on ties).
inline NodePtr maxpool_groups(const NodePtr& a, std::vector<std::size_t> offsets) {
  const std::size_t groups = offsets.size() - 1;
  const std::size_t C = a->value.cols;
  Tensor out(groups, C);
  auto argmax = std::make_shared<std::vector<std::size_t>>(groups * C);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = offsets[g], hi = offsets[g + 1];
    if (lo >= hi) throw std::invalid_argument("maxpool_groups: empty group");
    for (std::size_t c = 0; c < C; ++c) {
      double best = a->value.at(lo, c);
      std::size_t best_r = lo;
      for (std::size_t r = lo + 1; r < hi; ++r) {
        if (a->value.at(r, c) > best) {
          best = a->value.at(r, c);
          best_r = r;
        }
      }
      out.at(g, c) = best;
      (*argmax)[g * C + c] = best_r;
    }
  }
  return detail::make_op(std::move(out), {a}, [a, argmax](Node& n) {
    if (!a->requires_grad) return;
    const std::size_t C = n.value.cols;
    for (std::size_t g = 0; g < n.value.rows; ++g)
      for (std::size_t c = 0; c < C; ++c)
        a->grad.at((*argmax)[g * C + c], c) += n.grad.at(g, c);
  });
}

// Masked mean negative log-softmax at the target class. Pad positions carry
// mask = 0 and contribute nothing to loss or gradient.
inline NodePtr cross_entropy(const NodePtr& logits, const std::vector<int>& targets,
                             const std::vector<std::uint8_t>& mask = {}) {
  const std::size_t R = logits->value.rows, C = logits->value.cols;
  if (targets.size() != R) throw std::invalid_argument("cross_entropy: target count mismatch");
  for (std::size_t r = 0; r < R; ++r)
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= C)
      throw std::out_of_range("cross_entropy: target class out of range");
  auto probs = std::make_shared<Tensor>(R, C);
  double count = 0.0;
  double loss = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    const bool active = mask.empty() || mask[r] != 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, logits->value.at(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(logits->value.at(r, c) - mx);
    const double log_z = std::log(sum) + mx;
    for (std::size_t c = 0; c < C; ++c)
      probs->at(r, c) = std::exp(logits->value.at(r, c) - log_z);
    if (active) {
      loss += log_z - logits->value.at(r, static_cast<std::size_t>(targets[r]));
      count += 1.0;
    }
  }
  Tensor out(1, 1);
  out.at(0, 0) = count > 0.0 ? loss / count : 0.0;
  auto mask_copy = std::make_shared<std::vector<std::uint8_t>>(mask);
  auto targets_copy = std::make_shared<std::vector<int>>(targets);
  return detail::make_op(std::move(out), {logits},
                         [logits, probs, targets_copy, mask_copy, count](Node& n) {
                           if (!logits->requires_grad || count == 0.0) return;
                           const double g = n.grad.at(0, 0) / count;
                           const std::size_t C = probs->cols;
                           for (std::size_t r = 0; r < probs->rows; ++r) {
                             if (!mask_copy->empty() && (*mask_copy)[r] == 0) continue;
                             for (std::size_t c = 0; c < C; ++c)
                               logits->grad.at(r, c) += g * probs->at(r, c);
                             logits->grad.at(r, static_cast<std::size_t>((*targets_copy)[r])) -= g;
                           }
                         });
}

// Masked mean squared error against a constant target.
inline NodePtr mse(const NodePtr& pred, const Tensor& target,
                   const std::vector<std::uint8_t>& element_mask = {}) {
  if (!pred->value.same_shape(target)) throw std::invalid_argument("mse: shape mismatch");
  double count = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < target.data.size(); ++i) {
    if (!element_mask.empty() && element_mask[i] == 0) continue;
    const double d = pred->value.data[i] - target.data[i];
    loss += d * d;
    count += 1.0;
  }
  Tensor out(1, 1);
  out.at(0, 0) = count > 0.0 ? loss / count : 0.0;
  auto target_copy = std::make_shared<Tensor>(target);
  auto mask_copy = std::make_shared<std::vector<std::uint8_t>>(element_mask);
  return detail::make_op(std::move(out), {pred}, [pred, target_copy, mask_copy, count](Node& n) {
    if (!pred->requires_grad || count == 0.0) return;
    const double g = 2.0 * n.grad.at(0, 0) / count;
    for (std::size_t i = 0; i < target_copy->data.size(); ++i) {
      if (!mask_copy->empty() && (*mask_copy)[i] == 0) continue;
      pred->grad.data[i] += g * (pred->value.data[i] - target_copy->data[i]);
    }
  });
}

inline NodePtr add_scalar_nodes(const std::vector<NodePtr>& terms) {
  if (terms.empty()) throw std::invalid_argument("add_scalar_nodes: empty");
  NodePtr acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

}  // namespace transcad::nn
