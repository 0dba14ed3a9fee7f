#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "transcad/nn/layers.hpp"

namespace transcad::nn {

// Adam with a linear learning-rate warm-up: the effective rate ramps from 0
// to lr over the first `warmup_steps` updates, constant afterwards.
struct AdamOptimizer {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int warmup_steps = 2000;
  long step_count = 0;

  struct State {
    Tensor m, v;
  };
  std::map<std::string, State> state;

  double effective_lr(long step) const {
    if (warmup_steps <= 0) return lr;
    return lr * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
  }

  void step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
    ++step_count;
    const double lr_t = effective_lr(step_count);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (const auto& [name, grad] : grads) {
      Tensor& p = params.at(name);
      auto& st = state[name];
      if (st.m.size() != p.size()) {
        st.m = Tensor::zeros(p.rows, p.cols);
        st.v = Tensor::zeros(p.rows, p.cols);
      }
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double g = grad.data[i];
        st.m.data[i] = beta1 * st.m.data[i] + (1.0 - beta1) * g;
        st.v.data[i] = beta2 * st.v.data[i] + (1.0 - beta2) * g * g;
        const double mhat = st.m.data[i] / bc1;
        const double vhat = st.v.data[i] / bc2;
        p.data[i] -= lr_t * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

// Central-difference gradient verification. `build` must construct the full
// forward graph from the current store values and return the scalar loss
// node. Returns the max relative error over `samples` coordinates drawn
// across all parameters.
inline double grad_check(const std::function<NodePtr(ForwardContext&)>& build, ParamStore& params,
                         int samples, double epsilon = 1e-5, std::uint64_t seed = 0) {
  ForwardContext ctx(params);
  auto loss = build(ctx);
  if (loss->value.size() != 1) throw std::invalid_argument("grad_check: loss must be scalar");
  backward(loss);
  const auto analytic = ctx.harvest();

  std::vector<std::pair<std::string, std::size_t>> coords;
  for (const auto& [name, grad] : analytic)
    for (std::size_t i = 0; i < grad.size(); ++i) coords.push_back({name, i});
  if (coords.empty()) return 0.0;

  Rng rng(derive_seed(seed, 0x96adULL));
  double max_rel = 0.0;
  const int n = std::min<int>(samples, static_cast<int>(coords.size()));
  for (int s = 0; s < n; ++s) {
    const auto& [name, idx] =
        coords[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(coords.size()) - 1))];
    double& value = params.at(name).data[idx];
    const double saved = value;

    value = saved + epsilon;
    ForwardContext ctx_plus(params);
    const double f_plus = build(ctx_plus)->value.at(0, 0);

    value = saved - epsilon;
    ForwardContext ctx_minus(params);
    const double f_minus = build(ctx_minus)->value.at(0, 0);

    value = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
    const double a = analytic.at(name).data[idx];
    const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace transcad::nn
