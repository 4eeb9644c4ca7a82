#pragma once

#include <vector>

#include "ddr/common.hpp"
#include "ddr/geometry.hpp"
#include "ddr/rng.hpp"

namespace ddr {

// Sample positions and spacings along one ray. The last spacing has no
// successor; it is capped at the mean bin width so the final weight stays
// finite and the conservation identity holds exactly.
struct RaySampling {
  std::vector<double> t;
  std::vector<double> delta;
  double mean_delta = 0.0;
};

struct WeightDistribution {
  std::vector<double> t;
  std::vector<double> w;
};

struct RenderResult {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  WeightDistribution weights;
  std::vector<double> transmittance;
  double residual_transmittance = 1.0;
};

// One jittered (or midpoint) sample per equal-width bin of [t_near, t_far].
// Stream coordinates (iter, ray_id) keep jitter reproducible per ray.
inline RaySampling stratified_sample(const Ray& ray, int n, const CounterRng* rng,
                                     uint64_t iter = 0, uint64_t ray_id = 0) {
  require(n >= 2, "stratified_sample: need at least 2 samples");
  RaySampling s;
  s.t.resize(n);
  const double width = (ray.t_far - ray.t_near) / n;
  for (int i = 0; i < n; ++i) {
    const double u =
        rng ? rng->uniform(rng_stream::kStratifiedJitter, iter, ray_id, i) : 0.5;
    s.t[i] = ray.t_near + (i + u) * width;
  }
  s.mean_delta = width;
  s.delta.resize(n);
  for (int i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[n - 1] = width;
  return s;
}

// T_i = exp(-sum_{j<i} sigma_j delta_j); T_1 = 1.
inline std::vector<double> compute_transmittance(const std::vector<double>& sigma,
                                                 const std::vector<double>& delta) {
  require(sigma.size() == delta.size(), "compute_transmittance: length mismatch");
  std::vector<double> T(sigma.size());
  double acc = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    T[i] = std::exp(-acc);
    acc += sigma[i] * delta[i];
  }
  return T;
}

// Full per-ray forward pass over precomputed (sigma, color) samples.
inline RenderResult render_samples(const RaySampling& sampling,
                                   const std::vector<double>& sigma,
                                   const std::vector<Vec3>& color,
                                   const Vec3& background = Vec3::Zero()) {
  const size_t n = sampling.t.size();
  require(sigma.size() == n && color.size() == n, "render_samples: length mismatch");
  RenderResult r;
  r.weights.t = sampling.t;
  r.weights.w.resize(n);
  r.transmittance.resize(n);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double T = std::exp(-acc);
    r.transmittance[i] = T;
    const double alpha = -std::expm1(-sigma[i] * sampling.delta[i]);
    const double w = T * alpha;
    r.weights.w[i] = w;
    r.color += w * color[i];
    r.depth += w * sampling.t[i];
    acc += sigma[i] * sampling.delta[i];
  }
  r.residual_transmittance = std::exp(-acc);
  r.color += r.residual_transmittance * background;
  return r;
}

inline WeightDistribution compute_weights(const RaySampling& sampling,
                                          const std::vector<double>& sigma) {
  return render_samples(sampling, sigma, std::vector<Vec3>(sigma.size(), Vec3::Zero()))
      .weights;
}

inline Vec3 composite_color(const WeightDistribution& weights,
                            const std::vector<Vec3>& colors,
                            double residual_transmittance = 0.0,
                            const Vec3& background = Vec3::Zero()) {
  require(weights.w.size() == colors.size(), "composite_color: length mismatch");
  Vec3 c = residual_transmittance * background;
  for (size_t i = 0; i < colors.size(); ++i) c += weights.w[i] * colors[i];
  return c;
}

// Unnormalized expected depth sum_i w_i t_i.
inline double composite_depth(const WeightDistribution& weights) {
  double d = 0.0;
  for (size_t i = 0; i < weights.w.size(); ++i) d += weights.w[i] * weights.t[i];
  return d;
}

// Upstream gradients into a RenderResult.
struct RenderUpstream {
  Vec3 d_color = Vec3::Zero();
  double d_depth = 0.0;
  std::vector<double> d_weights;  // may be empty
  double d_residual = 0.0;
};

// Analytic adjoint of render_samples. Returns d(loss)/d(sigma_i) and
// d(loss)/d(color_i). Uses the forward result as its cache.
inline void render_backward(const RaySampling& sampling, const std::vector<double>& sigma,
                            const std::vector<Vec3>& color, const RenderResult& fwd,
                            const RenderUpstream& up, const Vec3& background,
                            std::vector<double>& d_sigma, std::vector<Vec3>& d_color) {
  const size_t n = sampling.t.size();
  require(fwd.weights.w.size() == n && sigma.size() == n && color.size() == n,
          "render_backward: cache/length mismatch");
  require(up.d_weights.empty() || up.d_weights.size() == n,
          "render_backward: upstream weight length mismatch");
  d_sigma.assign(n, 0.0);
  d_color.assign(n, Vec3::Zero());

  // Total adjoint of each weight: color, depth and any direct weight term.
  std::vector<double> a(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = up.d_color.dot(color[i]) + up.d_depth * sampling.t[i];
    if (!up.d_weights.empty()) a[i] += up.d_weights[i];
    d_color[i] = up.d_color * fwd.weights.w[i];
  }
  const double a_res = up.d_residual + up.d_color.dot(background);

  // w_i = T_i alpha_i with T_i = exp(-sum_{j<i} sigma_j delta_j):
  //   d w_i / d sigma_i = T_i delta_i (1 - alpha_i)
  //   d w_i / d sigma_j = -delta_j w_i            (j < i)
  //   d T_res / d sigma_j = -delta_j T_res.
  // Suffix accumulation gives O(n).
  double suffix = a_res * fwd.residual_transmittance;
  for (size_t i = n; i-- > 0;) {
    const double alpha = -std::expm1(-sigma[i] * sampling.delta[i]);
    d_sigma[i] = a[i] * fwd.transmittance[i] * sampling.delta[i] * (1.0 - alpha) -
                 sampling.delta[i] * suffix;
    suffix += a[i] * fwd.weights.w[i];
  }
}

}  // namespace ddr
