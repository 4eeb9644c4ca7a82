#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddr/common.hpp"
#include "ddr/render.hpp"
#include "ddr/rng.hpp"

namespace ddr {

struct GumbelConfig {
  double epsilon = 2.0;       // softmax temperature
  int n_samples = 30;         // composite draws per ray
  double weight_floor = 1e-8; // floor applied before taking logs
  uint64_t seed = 0;
};

struct DensityLossConfig {
  int margin = 2;  // sample spacings kept clear before the boundary
};

// Continuation of a discrete weight distribution into a density: unit-area
// symmetric triangles of half-width delta centered at the sample positions,
// mixed by the (normalized) weights. Equals linear interpolation of the
// discrete weights when samples are equidistant.
struct TriangularMixture {
  std::vector<double> centers;
  std::vector<double> weights;  // normalized, each >= floor
  double delta = 0.0;

  static TriangularMixture from_distribution(const WeightDistribution& dist,
                                             double delta, double floor) {
    require(delta > 0.0, "TriangularMixture: delta must be positive");
    TriangularMixture m;
    m.centers = dist.t;
    m.delta = delta;
    m.weights.resize(dist.w.size());
    double sum = 0.0;
    for (size_t i = 0; i < dist.w.size(); ++i) {
      m.weights[i] = std::max(dist.w[i], floor);
      sum += m.weights[i];
    }
    for (double& w : m.weights) w /= sum;
    return m;
  }
};

// p_i(t): symmetric triangle, peak 1/delta at the center, support width
// 2*delta.
inline double triangle_pdf(double center, double delta, double t) {
  const double u = std::abs(t - center);
  return u >= delta ? 0.0 : (delta - u) / (delta * delta);
}

inline double mixture_pdf(const TriangularMixture& mix, double t) {
  double p = 0.0;
  for (size_t i = 0; i < mix.centers.size(); ++i)
    p += mix.weights[i] * triangle_pdf(mix.centers[i], mix.delta, t);
  return p;
}

// g = -log(-log u), u in (0,1).
inline double gumbel_noise(double u) {
  require(u > 0.0 && u < 1.0, "gumbel_noise: u must be in (0,1)");
  return -std::log(-std::log(u));
}

// Softened categorical selection: softmax over (g_i + log w_i) / epsilon.
// Invariant to positive rescaling of w. Weights must already be floored.
inline std::vector<double> gumbel_softmax(const std::vector<double>& w,
                                          const std::vector<double>& g,
                                          double epsilon) {
  require(w.size() == g.size(), "gumbel_softmax: length mismatch");
  require(epsilon > 0.0, "gumbel_softmax: epsilon must be positive");
  const size_t n = w.size();
  std::vector<double> z(n), out(n);
  double zmax = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    require(w[i] > 0.0, "gumbel_softmax: weights must be positive");
    z[i] = (g[i] + std::log(w[i])) / epsilon;
    zmax = std::max(zmax, z[i]);
  }
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Inverse CDF of the symmetric triangle on [center - delta, center + delta].
inline double sample_triangle(double center, double delta, double u) {
  require(u > 0.0 && u < 1.0, "sample_triangle: u must be in (0,1)");
  if (u <= 0.5) return center - delta + delta * std::sqrt(2.0 * u);
  return center + delta - delta * std::sqrt(2.0 * (1.0 - u));
}

// T_hat = sum_i w_hat_i t_hat_i. Positions carry no gradient.
inline double composite_sample(const std::vector<double>& w_hat,
                               const std::vector<double>& t_hat) {
  require(w_hat.size() == t_hat.size(), "composite_sample: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < w_hat.size(); ++i) s += w_hat[i] * t_hat[i];
  return s;
}

// Mixture half-width: the ray's mean sample spacing.
inline double mixture_delta(const WeightDistribution& dist) {
  require(dist.t.size() >= 2, "mixture_delta: need at least 2 samples");
  return (dist.t.back() - dist.t.front()) / static_cast<double>(dist.t.size() - 1);
}

struct WeightLossResult {
  double loss = 0.0;
  std::vector<double> d_weights;  // gradient w.r.t. the raw rendering weights
  bool skipped = false;           // all-zero weight ray
};

// Expectation-of-error depth loss: draw n_samples composite samples from the
// triangular mixture via Gumbel-softmax and average |depth_gt - T_hat|.
// Gradient flows to the raw weights through flooring, normalization, log,
// softmax and the weighted sum; triangle draws are detached.
//
// Noise stream coordinates: (iter, ray_id) index the per-ray streams so
// concurrent rays and frozen-noise FD checks are deterministic.
inline WeightLossResult weight_loss(const WeightDistribution& dist, double depth_gt,
                                    const GumbelConfig& cfg, const CounterRng& rng,
                                    uint64_t iter = 0, uint64_t ray_id = 0) {
  const size_t n = dist.w.size();
  WeightLossResult res;
  res.d_weights.assign(n, 0.0);
  double wsum = 0.0;
  for (double w : dist.w) wsum += w;
  if (!(wsum >= static_cast<double>(n) * cfg.weight_floor)) {  // also NaN
    res.skipped = true;
    return res;
  }

  // Floor + normalize.
  std::vector<double> wf(n);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    wf[i] = std::max(dist.w[i], cfg.weight_floor);
    s += wf[i];
  }
  std::vector<double> p(n);
  for (size_t i = 0; i < n; ++i) p[i] = wf[i] / s;

  const double delta = mixture_delta(dist);
  std::vector<double> g(n), t_hat(n), d_p(n, 0.0);
  for (int k = 0; k < cfg.n_samples; ++k) {
    for (size_t i = 0; i < n; ++i) {
      g[i] = gumbel_noise(rng.uniform(rng_stream::kGumbel, iter, ray_id,
                                      static_cast<uint64_t>(k) * n + i));
      t_hat[i] = sample_triangle(
          dist.t[i], delta,
          rng.uniform(rng_stream::kTriangle, iter, ray_id,
                      static_cast<uint64_t>(k) * n + i));
    }
    const std::vector<double> w_hat = gumbel_softmax(p, g, cfg.epsilon);
    const double T_hat = composite_sample(w_hat, t_hat);
    res.loss += std::abs(depth_gt - T_hat);

    // d|depth_gt - T_hat| / d w_hat_i = -sign(depth_gt - T_hat) * t_hat_i,
    // then softmax adjoint into the logits z = (g + log p)/eps.
    const double dT = (T_hat > depth_gt) ? 1.0 : (T_hat < depth_gt ? -1.0 : 0.0);
    double dot = 0.0;
    for (size_t i = 0; i < n; ++i) dot += w_hat[i] * dT * t_hat[i];
    for (size_t i = 0; i < n; ++i) {
      const double dz = w_hat[i] * (dT * t_hat[i] - dot);
      d_p[i] += dz / (cfg.epsilon * p[i]);
    }
  }
  const double inv = 1.0 / cfg.n_samples;
  res.loss *= inv;

  // Through normalization p = wf / s, then the floor (zero subgradient on
  // floored entries).
  double pdot = 0.0;
  for (size_t i = 0; i < n; ++i) pdot += d_p[i] * p[i];
  for (size_t i = 0; i < n; ++i) {
    if (dist.w[i] <= cfg.weight_floor) continue;
    res.d_weights[i] = inv * (d_p[i] - pdot) / s;
  }
  return res;
}

struct DensityLossResult {
  double loss = 0.0;
  std::vector<double> d_sigma;  // 0/1 indicator
};

// L1 penalty on density strictly before the surface: sum of sigma_i over
// samples with t_i < depth_gt - margin * mean spacing.
inline DensityLossResult density_loss(const RaySampling& sampling,
                                      const std::vector<double>& sigma,
                                      double depth_gt, const DensityLossConfig& cfg) {
  require(sampling.t.size() == sigma.size(), "density_loss: length mismatch");
  require(cfg.margin >= 0, "density_loss: margin must be >= 0");
  DensityLossResult res;
  res.d_sigma.assign(sigma.size(), 0.0);
  const double cutoff = depth_gt - cfg.margin * sampling.mean_delta;
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (sampling.t[i] < cutoff) {
      res.loss += sigma[i];
      res.d_sigma[i] = 1.0;
    }
  }
  return res;
}

}  // namespace ddr
