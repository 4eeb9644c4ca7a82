#pragma once

#include <cmath>
#include <vector>

#include "ddr/common.hpp"

namespace ddr {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam for one parameter group. The step counter is shared by
// the caller across groups via step().
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;

  AdamState() = default;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One update with step index `state.step + 1`; caller advances state.step
// once per iteration after all groups are updated.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: shape mismatch");
  const int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace ddr
