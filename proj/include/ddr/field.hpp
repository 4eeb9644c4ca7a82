#pragma once

#include <algorithm>
#include <cstdint>
#include <variant>
#include <vector>

#include "ddr/common.hpp"
#include "ddr/geometry.hpp"

namespace ddr {

struct FieldSample {
  double sigma = 0.0;  // nonnegative by construction (softplus)
  Vec3 color = Vec3::Zero();
};

// Learnable trilinear voxel grid over an axis-aligned box. Raw parameters are
// unconstrained; density goes through softplus and color through a logistic
// squash, so every parameter value yields a valid FieldSample. frame_count > 1
// stores one independent grid per frame (nearest-frame lookup).
class GridField {
 public:
  GridField() = default;
  GridField(const Eigen::Vector3i& resolution, const Vec3& bbox_min,
            const Vec3& bbox_max, int frame_count, double sigma_init = -4.0,
            double color_init = 0.0)
      : resolution_(resolution),
        bbox_min_(bbox_min),
        bbox_max_(bbox_max),
        frame_count_(frame_count) {
    require(resolution.minCoeff() >= 2, "GridField: resolution must be >= 2 per axis");
    require(frame_count >= 1, "GridField: frame_count must be >= 1");
    require((bbox_max - bbox_min).minCoeff() > 0.0, "GridField: empty bbox");
    const size_t n = voxels_per_frame() * static_cast<size_t>(frame_count);
    sigma_params_.assign(n, sigma_init);
    color_params_.assign(n * 3, color_init);
  }

  const Eigen::Vector3i& resolution() const { return resolution_; }
  const Vec3& bbox_min() const { return bbox_min_; }
  const Vec3& bbox_max() const { return bbox_max_; }
  int frame_count() const { return frame_count_; }
  size_t voxels_per_frame() const {
    return static_cast<size_t>(resolution_.x()) * resolution_.y() * resolution_.z();
  }
  size_t sigma_param_count() const { return sigma_params_.size(); }
  size_t color_param_count() const { return color_params_.size(); }

  std::vector<double>& sigma_params() { return sigma_params_; }
  std::vector<double>& color_params() { return color_params_; }
  const std::vector<double>& sigma_params() const { return sigma_params_; }
  const std::vector<double>& color_params() const { return color_params_; }

  // Trilinear interpolation context for one query point: the eight enclosing
  // voxels and their weights. Reused by query, the parameter adjoint, and the
  // spatial gradient.
  struct Taps {
    bool inside = false;
    size_t index[8];
    double weight[8];
    // d(weight)/d(x) per tap, in grid-unit coordinates scaled to scene units.
    Vec3 weight_grad[8];
  };

  Taps taps(const Vec3& x, int frame) const {
    require(frame >= 0, "GridField: negative frame");
    require(frame_count_ == 1 || frame < frame_count_, "GridField: frame out of range");
    Taps t{};
    if ((x.array() < bbox_min_.array()).any() || (x.array() > bbox_max_.array()).any())
      return t;
    t.inside = true;
    const int fr = std::min(frame, frame_count_ - 1);
    const size_t base = voxels_per_frame() * static_cast<size_t>(fr);
    // Continuous grid coordinates: voxel centers sit on lattice points.
    Vec3 g, scale;
    Eigen::Vector3i i0;
    Vec3 frac;
    for (int a = 0; a < 3; ++a) {
      scale[a] = (resolution_[a] - 1) / (bbox_max_[a] - bbox_min_[a]);
      g[a] = (x[a] - bbox_min_[a]) * scale[a];
      int i = static_cast<int>(std::floor(g[a]));
      i = std::clamp(i, 0, resolution_[a] - 2);
      i0[a] = i;
      frac[a] = g[a] - i;
    }
    const size_t sy = static_cast<size_t>(resolution_.z());
    const size_t sx = sy * resolution_.y();
    int k = 0;
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dz = 0; dz < 2; ++dz, ++k) {
          const double wx = dx ? frac.x() : 1.0 - frac.x();
          const double wy = dy ? frac.y() : 1.0 - frac.y();
          const double wz = dz ? frac.z() : 1.0 - frac.z();
          t.index[k] = base + (i0.x() + dx) * sx + (i0.y() + dy) * sy + (i0.z() + dz);
          t.weight[k] = wx * wy * wz;
          t.weight_grad[k] = Vec3((dx ? 1.0 : -1.0) * wy * wz * scale.x(),
                                  (dy ? 1.0 : -1.0) * wx * wz * scale.y(),
                                  (dz ? 1.0 : -1.0) * wx * wy * scale.z());
        }
    return t;
  }

  // Raw (pre-activation) interpolated values.
  void raw_query(const Taps& t, double& sigma_raw, Vec3& color_raw) const {
    sigma_raw = 0.0;
    color_raw.setZero();
    if (!t.inside) return;
    for (int k = 0; k < 8; ++k) {
      sigma_raw += t.weight[k] * sigma_params_[t.index[k]];
      for (int c = 0; c < 3; ++c)
        color_raw[c] += t.weight[k] * color_params_[t.index[k] * 3 + c];
    }
  }

  FieldSample query(const Vec3& x, int frame) const {
    require(frame_count_ == 1 || frame < frame_count_, "GridField: frame out of range");
    const Taps t = taps(x, frame);
    if (!t.inside) return FieldSample{};
    double sr;
    Vec3 cr;
    raw_query(t, sr, cr);
    FieldSample s;
    s.sigma = softplus(sr);
    for (int c = 0; c < 3; ++c) s.color[c] = logistic(cr[c]);
    return s;
  }

  // Accumulate d(loss)/d(params) given upstream d(loss)/d(FieldSample).
  // Buffers must be shaped like the parameter arrays.
  void query_gradient(const Vec3& x, int frame, double d_sigma, const Vec3& d_color,
                      std::vector<double>& sigma_grad,
                      std::vector<double>& color_grad) const {
    const Taps t = taps(x, frame);
    if (!t.inside) return;
    double sr;
    Vec3 cr;
    raw_query(t, sr, cr);
    const double ds_raw = d_sigma * softplus_deriv(sr);
    Vec3 dc_raw;
    for (int c = 0; c < 3; ++c) dc_raw[c] = d_color[c] * logistic_deriv(cr[c]);
    for (int k = 0; k < 8; ++k) {
      sigma_grad[t.index[k]] += ds_raw * t.weight[k];
      for (int c = 0; c < 3; ++c)
        color_grad[t.index[k] * 3 + c] += dc_raw[c] * t.weight[k];
    }
  }

  // Spatial derivatives of the activated sample, for gradients with respect
  // to ray geometry (camera refinement). d_color_dx rows are d(color_c)/d(x).
  void spatial_gradient(const Vec3& x, int frame, Vec3& d_sigma_dx,
                        Mat3& d_color_dx) const {
    d_sigma_dx.setZero();
    d_color_dx.setZero();
    const Taps t = taps(x, frame);
    if (!t.inside) return;
    double sr;
    Vec3 cr;
    raw_query(t, sr, cr);
    Vec3 dsr = Vec3::Zero();
    Mat3 dcr = Mat3::Zero();
    for (int k = 0; k < 8; ++k) {
      dsr += t.weight_grad[k] * sigma_params_[t.index[k]];
      for (int c = 0; c < 3; ++c)
        dcr.row(c) += t.weight_grad[k].transpose() * color_params_[t.index[k] * 3 + c];
    }
    d_sigma_dx = softplus_deriv(sr) * dsr;
    for (int c = 0; c < 3; ++c) d_color_dx.row(c) = logistic_deriv(cr[c]) * dcr.row(c);
  }

 private:
  Eigen::Vector3i resolution_{0, 0, 0};
  Vec3 bbox_min_{0, 0, 0};
  Vec3 bbox_max_{0, 0, 0};
  int frame_count_ = 1;
  std::vector<double> sigma_params_;
  std::vector<double> color_params_;
};

// Closed-form test fields: opaque primitives with exact first-hit depths.
struct SpherePrim {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  double sigma = 1e4;
  Vec3 color{1, 1, 1};
};

// Axis-aligned slab z in [z_min, z_max]; optional checker albedo in x/y.
struct SlabPrim {
  double z_min = -1.0;
  double z_max = 0.0;
  double sigma = 1e4;
  Vec3 color{1, 1, 1};
  Vec3 color2{1, 1, 1};   // second checker color; equal colors = solid
  double checker_size = 0.0;  // 0 disables the checker
};

class AnalyticField {
 public:
  std::vector<SpherePrim> spheres;
  std::vector<SlabPrim> slabs;

  FieldSample query(const Vec3& x) const {
    for (const auto& s : spheres)
      if ((x - s.center).squaredNorm() <= s.radius * s.radius)
        return FieldSample{s.sigma, s.color};
    for (const auto& s : slabs)
      if (x.z() >= s.z_min && x.z() <= s.z_max)
        return FieldSample{s.sigma, slab_color(s, x)};
    return FieldSample{};
  }

  // First intersection distance with any opaque surface, or ray.t_far.
  double first_hit(const Ray& ray) const {
    double best = ray.t_far;
    for (const auto& s : spheres) {
      const Vec3 oc = ray.origin - s.center;
      const double b = oc.dot(ray.direction);
      const double c = oc.squaredNorm() - s.radius * s.radius;
      const double disc = b * b - c;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      for (double t : {-b - sq, -b + sq})
        if (t >= ray.t_near && t < best) {
          best = t;
          break;
        }
    }
    for (const auto& s : slabs) {
      if (std::abs(ray.direction.z()) < 1e-300) continue;
      for (double zp : {s.z_max, s.z_min}) {
        const double t = (zp - ray.origin.z()) / ray.direction.z();
        if (t >= ray.t_near && t < best) {
          const Vec3 p = ray.origin + t * ray.direction;
          if (p.z() >= s.z_min - 1e-12 && p.z() <= s.z_max + 1e-12) best = std::min(best, t);
        }
      }
    }
    return best;
  }

  // Albedo of the surface first hit by the ray; background black if none.
  Vec3 first_hit_color(const Ray& ray, double* depth_out = nullptr) const {
    const double t = first_hit(ray);
    if (depth_out) *depth_out = t;
    if (t >= ray.t_far) return Vec3::Zero();
    const Vec3 p = ray.origin + (t + 1e-9) * ray.direction;
    const FieldSample s = query(p);
    return s.color;
  }

  static Vec3 slab_color(const SlabPrim& s, const Vec3& x) {
    if (s.checker_size <= 0.0) return s.color;
    const auto cell = [&](double v) {
      return static_cast<long long>(std::floor(v / s.checker_size));
    };
    return ((cell(x.x()) + cell(x.y())) % 2 + 2) % 2 == 0 ? s.color : s.color2;
  }
};

inline double analytic_depth(const AnalyticField& field, const Ray& ray) {
  return field.first_hit(ray);
}

}  // namespace ddr
