#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ddr/common.hpp"

namespace ddr {

struct Lambdas {
  double rgb = 1.0;
  double depth = 0.1;
  double weight = 0.1;
  double density = 0.01;
  double grad = 0.1;
};

// Per-batch loss components with their mixing coefficients.
struct LossBundle {
  double rgb = 0.0;
  double depth = 0.0;
  double weight = 0.0;
  double density = 0.0;
  double grad = 0.0;
  Lambdas lambdas;
  double total = 0.0;
};

// Mean squared color error over the batch; gradient 2(pred-target)/count.
inline double rgb_loss(const std::vector<Vec3>& pred, const std::vector<Vec3>& target,
                       std::vector<Vec3>* grad = nullptr) {
  require(pred.size() == target.size() && !pred.empty(), "rgb_loss: length mismatch");
  if (grad) grad->assign(pred.size(), Vec3::Zero());
  double loss = 0.0;
  const double inv = 1.0 / pred.size();
  for (size_t i = 0; i < pred.size(); ++i) {
    const Vec3 e = pred[i] - target[i];
    loss += e.squaredNorm() * inv;
    if (grad) (*grad)[i] = 2.0 * inv * e;
  }
  return loss;
}

// Mean squared depth error.
inline double depth_loss(const std::vector<double>& pred, const std::vector<double>& gt,
                         std::vector<double>* grad = nullptr) {
  require(pred.size() == gt.size() && !pred.empty(), "depth_loss: length mismatch");
  if (grad) grad->assign(pred.size(), 0.0);
  double loss = 0.0;
  const double inv = 1.0 / pred.size();
  for (size_t i = 0; i < pred.size(); ++i) {
    require(std::isfinite(gt[i]), "depth_loss: non-finite ground truth");
    const double e = pred[i] - gt[i];
    loss += e * e * inv;
    if (grad) (*grad)[i] = 2.0 * inv * e;
  }
  return loss;
}

inline double depth_diff(double d1, double d2) { return std::abs(d1 - d2); }

// Depth smoothing: match absolute depth differences of consecutive rays in
// the batch against the ground truth. Batches are built as horizontal pixel
// runs, so consecutive entries are image neighbors. Subgradient 0 at ties.
inline double grad_loss(const std::vector<double>& pred, const std::vector<double>& gt,
                        std::vector<double>* grad = nullptr) {
  require(pred.size() == gt.size(), "grad_loss: length mismatch");
  require(pred.size() >= 2, "grad_loss: need at least 2 rays");
  if (grad) grad->assign(pred.size(), 0.0);
  const size_t n = pred.size();
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double dp = pred[i] - pred[i + 1];
    const double dg = gt[i] - gt[i + 1];
    const double e = std::abs(dp) - std::abs(dg);
    loss += std::abs(e) * inv;
    if (grad) {
      const double s = (e > 0) - (e < 0);
      const double sp = (dp > 0) - (dp < 0);
      (*grad)[i] += inv * s * sp;
      (*grad)[i + 1] -= inv * s * sp;
    }
  }
  return loss;
}

inline LossBundle aggregate(double rgb, double depth, double weight, double density,
                            double grad, const Lambdas& lambdas) {
  const struct {
    const char* name;
    double value;
  } parts[] = {{"rgb", rgb}, {"depth", depth}, {"weight", weight},
               {"density", density}, {"grad", grad}};
  for (const auto& p : parts)
    require(std::isfinite(p.value),
            std::string("aggregate: non-finite loss component: ") + p.name);
  LossBundle b;
  b.rgb = rgb;
  b.depth = depth;
  b.weight = weight;
  b.density = density;
  b.grad = grad;
  b.lambdas = lambdas;
  b.total = lambdas.rgb * rgb + lambdas.depth * depth + lambdas.weight * weight +
            lambdas.density * density + lambdas.grad * grad;
  return b;
}

}  // namespace ddr
