#pragma once

#include <cstdint>
#include <vector>

#include "ddr/common.hpp"
#include "ddr/field.hpp"
#include "ddr/geometry.hpp"
#include "ddr/losses.hpp"
#include "ddr/regularizer.hpp"
#include "ddr/render.hpp"
#include "ddr/rng.hpp"

namespace ddr {

// Per-frame cameras: fixed initial estimates plus learnable residuals
// (delta_f lives inside PinholeCamera, the pose residual in PoseResidual).
struct CameraRig {
  std::vector<PinholeCamera> cameras;
  std::vector<Pose> init_poses;
  std::vector<PoseResidual> residuals;

  size_t frame_count() const { return cameras.size(); }

  Pose effective_pose(size_t frame) const {
    return compose_pose(init_poses[frame], residuals[frame]);
  }

  void check() const {
    require(cameras.size() == init_poses.size() && cameras.size() == residuals.size(),
            "CameraRig: per-frame arrays disagree");
    for (const auto& p : init_poses)
      require(pose_valid(p), "CameraRig: non-orthonormal initial pose");
  }
};

// Accumulates d(loss)/d(parameters) for one field plus one rig. Zeroed
// between iterations. Concurrent rays must use disjoint buffers merged by
// summation.
struct GradientBuffer {
  std::vector<double> sigma;
  std::vector<double> color;
  std::vector<Vec6> xi;
  std::vector<double> delta_f;

  GradientBuffer() = default;
  GradientBuffer(const GridField& field, const CameraRig& rig) {
    sigma.assign(field.sigma_param_count(), 0.0);
    color.assign(field.color_param_count(), 0.0);
    xi.assign(rig.frame_count(), Vec6::Zero());
    delta_f.assign(rig.frame_count(), 0.0);
  }

  void zero() {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(color.begin(), color.end(), 0.0);
    std::fill(xi.begin(), xi.end(), Vec6::Zero());
    std::fill(delta_f.begin(), delta_f.end(), 0.0);
  }

  void add(const GradientBuffer& other) {
    for (size_t i = 0; i < sigma.size(); ++i) sigma[i] += other.sigma[i];
    for (size_t i = 0; i < color.size(); ++i) color[i] += other.color[i];
    for (size_t i = 0; i < xi.size(); ++i) xi[i] += other.xi[i];
    for (size_t i = 0; i < delta_f.size(); ++i) delta_f[i] += other.delta_f[i];
  }
};

struct PipelineConfig {
  int n_samples = 128;
  bool use_ndc = true;
  double ndc_near = 1.0;
  double t_near = 0.0;  // world-space sampling bounds (also pre-warp bounds)
  double t_far = 8.0;
  bool jitter = false;  // midpoint sampling unless enabled
  Vec3 background = Vec3::Zero();
  Lambdas lambdas;
  GumbelConfig gumbel;
  DensityLossConfig density;
  bool learn_cameras = false;
  int run_length = 32;  // horizontally adjacent pixels per batch segment
};

// One supervised ray request: pixel of a frame plus its ground truth.
struct RaySpec {
  int frame = 0;
  Vec2 px{0, 0};
  Vec3 gt_color = Vec3::Zero();
  double gt_depth = 0.0;  // metric distance along the world ray
  // When set, gt_depth is already a render-ray parameter (skips the NDC
  // conversion). Ground-truth depth is supervision: it never carries camera
  // gradient, and freezing it here is what makes FD checks under camera
  // perturbation well defined.
  bool gt_in_render_space = false;
};

// Everything the backward pass needs about one rendered ray.
struct RayCache {
  Ray world_ray;
  Ray render_ray;  // equals world_ray unless NDC is enabled
  RaySampling sampling;
  std::vector<double> sigma;
  std::vector<Vec3> color;
  RenderResult result;
  double gt_t = 0.0;  // ground-truth depth in render-ray parameter units
  WeightLossResult wl;
  DensityLossResult dl;
};

struct BatchResult {
  LossBundle losses;
  std::vector<RayCache> caches;
  int weight_rays_skipped = 0;
};

// Forward + loss evaluation + analytic backward for a batch of rays. The
// computation graph is fixed, so the adjoint is written out stage by stage
// instead of taping.
class RenderPipeline {
 public:
  RenderPipeline(const GridField& field, const CameraRig& rig,
                 const PipelineConfig& cfg, const CounterRng& rng)
      : field_(&field), rig_(&rig), cfg_(cfg), rng_(&rng) {}

  const PipelineConfig& config() const { return cfg_; }

  // Renders one ray and evaluates its per-ray loss pieces.
  RayCache forward_ray(const RaySpec& spec, uint64_t iter, uint64_t ray_id) const {
    RayCache c;
    const PinholeCamera& cam = rig_->cameras[spec.frame];
    const Pose pose = rig_->effective_pose(spec.frame);
    c.world_ray = pixel_ray(cam, pose, spec.px, cfg_.t_near, cfg_.t_far);
    // Ground truth is only converted when some loss consumes it; plain
    // rendering passes gt_depth = 0, which the warp would reject.
    const bool need_gt = cfg_.lambdas.depth > 0.0 || cfg_.lambdas.weight > 0.0 ||
                         cfg_.lambdas.density > 0.0 || cfg_.lambdas.grad > 0.0;
    if (cfg_.use_ndc) {
      c.render_ray = to_ndc(c.world_ray, cam, cfg_.ndc_near);
      c.gt_t = !need_gt ? 0.0
               : spec.gt_in_render_space
                   ? spec.gt_depth
                   : ndc_ray_param(c.world_ray, cam, cfg_.ndc_near, spec.gt_depth);
    } else {
      c.render_ray = c.world_ray;
      c.gt_t = spec.gt_depth;
    }
    c.sampling = stratified_sample(c.render_ray, cfg_.n_samples,
                                   cfg_.jitter ? rng_ : nullptr, iter, ray_id);
    const int n = cfg_.n_samples;
    c.sigma.resize(n);
    c.color.resize(n);
    for (int i = 0; i < n; ++i) {
      const Vec3 x = c.render_ray.origin + c.sampling.t[i] * c.render_ray.direction;
      const FieldSample s = field_->query(x, spec.frame);
      c.sigma[i] = s.sigma;
      c.color[i] = s.color;
    }
    c.result = render_samples(c.sampling, c.sigma, c.color, cfg_.background);
    if (cfg_.lambdas.weight > 0.0)
      c.wl = weight_loss(c.result.weights, c.gt_t, cfg_.gumbel, *rng_, iter, ray_id);
    if (cfg_.lambdas.density > 0.0)
      c.dl = density_loss(c.sampling, c.sigma, c.gt_t, cfg_.density);
    return c;
  }

  BatchResult forward(const std::vector<RaySpec>& batch, uint64_t iter) const {
    BatchResult r;
    r.caches.reserve(batch.size());
    std::vector<Vec3> pred_color(batch.size());
    std::vector<Vec3> gt_color(batch.size());
    std::vector<double> pred_depth(batch.size());
    std::vector<double> gt_depth(batch.size());
    double wsum = 0.0, dsum = 0.0;
    int wcount = 0;
    for (size_t i = 0; i < batch.size(); ++i) {
      r.caches.push_back(forward_ray(batch[i], iter, i));
      const RayCache& c = r.caches.back();
      pred_color[i] = c.result.color;
      gt_color[i] = batch[i].gt_color;
      pred_depth[i] = c.result.depth;
      gt_depth[i] = c.gt_t;
      if (cfg_.lambdas.weight > 0.0) {
        if (c.wl.skipped) {
          ++r.weight_rays_skipped;
        } else {
          wsum += c.wl.loss;
          ++wcount;
        }
      }
      dsum += c.dl.loss;
    }
    const double L_rgb =
        cfg_.lambdas.rgb > 0.0 ? rgb_loss(pred_color, gt_color, &rgb_grad_) : 0.0;
    const double L_depth =
        cfg_.lambdas.depth > 0.0 ? depth_loss(pred_depth, gt_depth, &depth_grad_) : 0.0;
    const double L_grad =
        cfg_.lambdas.grad > 0.0 ? segmented_grad_loss(pred_depth, gt_depth) : 0.0;
    const double L_weight = wcount > 0 ? wsum / wcount : 0.0;
    const double L_density = batch.empty() ? 0.0 : dsum / batch.size();
    r.losses = aggregate(L_rgb, L_depth, L_weight, L_density, L_grad, cfg_.lambdas);
    weight_count_ = wcount;
    return r;
  }

  // Full analytic backward for the batch, accumulating into `buf`.
  void backward(const std::vector<RaySpec>& batch, const BatchResult& fwd,
                GradientBuffer& buf) const {
    const Lambdas& lam = cfg_.lambdas;
    for (size_t i = 0; i < batch.size(); ++i) {
      const RayCache& c = fwd.caches[i];
      RenderUpstream up;
      if (lam.rgb > 0.0) up.d_color = lam.rgb * rgb_grad_[i];
      if (lam.depth > 0.0) up.d_depth += lam.depth * depth_grad_[i];
      if (lam.grad > 0.0) up.d_depth += lam.grad * grad_grad_[i];
      if (lam.weight > 0.0 && !c.wl.skipped && weight_count_ > 0) {
        up.d_weights = c.wl.d_weights;
        const double scale = lam.weight / weight_count_;
        for (double& v : up.d_weights) v *= scale;
      }
      std::vector<double> d_sigma;
      std::vector<Vec3> d_color;
      render_backward(c.sampling, c.sigma, c.color, c.result, up, cfg_.background,
                      d_sigma, d_color);
      if (lam.density > 0.0 && !batch.empty()) {
        const double scale = lam.density / batch.size();
        for (size_t k = 0; k < d_sigma.size(); ++k)
          d_sigma[k] += scale * c.dl.d_sigma[k];
      }
      backpropagate_ray(batch[i], c, d_sigma, d_color, buf);
    }
  }

 private:
  double segmented_grad_loss(const std::vector<double>& pred,
                             const std::vector<double>& gt) const {
    grad_grad_.assign(pred.size(), 0.0);
    const size_t run = std::max(2, cfg_.run_length);
    double total = 0.0;
    size_t pairs = 0;
    for (size_t s = 0; s < pred.size(); s += run) {
      const size_t e = std::min(pred.size(), s + run);
      if (e - s < 2) continue;
      for (size_t i = s; i + 1 < e; ++i) {
        const double dp = pred[i] - pred[i + 1];
        const double dg = gt[i] - gt[i + 1];
        const double err = std::abs(dp) - std::abs(dg);
        total += std::abs(err);
        ++pairs;
        const double sg = (err > 0) - (err < 0);
        const double sp = (dp > 0) - (dp < 0);
        grad_grad_[i] += sg * sp;
        grad_grad_[i + 1] -= sg * sp;
      }
    }
    if (pairs == 0) return 0.0;
    for (double& v : grad_grad_) v /= static_cast<double>(pairs);
    return total / static_cast<double>(pairs);
  }

  // Field-parameter and camera-residual adjoints for one ray, given
  // d(loss)/d(sigma_i) and d(loss)/d(color_i) at the activated samples.
  void backpropagate_ray(const RaySpec& spec, const RayCache& c,
                         const std::vector<double>& d_sigma,
                         const std::vector<Vec3>& d_color, GradientBuffer& buf) const {
    Vec3 g_origin = Vec3::Zero();
    Vec3 g_dir = Vec3::Zero();
    for (int i = 0; i < cfg_.n_samples; ++i) {
      const Vec3 x = c.render_ray.origin + c.sampling.t[i] * c.render_ray.direction;
      field_->query_gradient(x, spec.frame, d_sigma[i], d_color[i], buf.sigma,
                             buf.color);
      if (cfg_.learn_cameras) {
        Vec3 dsdx;
        Mat3 dcdx;
        field_->spatial_gradient(x, spec.frame, dsdx, dcdx);
        const Vec3 gx = d_sigma[i] * dsdx + dcdx.transpose() * d_color[i];
        g_origin += gx;
        g_dir += c.sampling.t[i] * gx;
      }
    }
    if (!cfg_.learn_cameras) return;

    const PinholeCamera& cam = rig_->cameras[spec.frame];
    const double f = effective_focal(cam);
    double g_f = 0.0;
    Vec3 g_worigin, g_wdir;
    if (cfg_.use_ndc) {
      to_ndc_adjoint(c.world_ray, cam, cfg_.ndc_near, g_origin, g_dir, g_worigin,
                     g_wdir, g_f);
    } else {
      g_worigin = g_origin;
      g_wdir = g_dir;
    }

    // World direction: d = R_init R_e(omega) normalize(m(f)).
    const Pose& init = rig_->init_poses[spec.frame];
    const Vec3 omega = rig_->residuals[spec.frame].xi.head<3>();
    const Mat3 Re = so3_exp(omega);
    const Vec3 m = pixel_cam_dir(cam, spec.px);
    const Vec3 nvec = m.normalized();
    const Vec3 g_rotated = (init.rotation * Re).transpose() * g_wdir;  // grad at n
    // omega: d(Re n)/d(omega) = -Re [n]x Jr(omega).
    const Vec3 g_omega = so3_right_jacobian(omega).transpose() * (skew(nvec) * g_rotated);
    // Through normalization n = m / |m|.
    const Vec3 g_m = (g_rotated - nvec * nvec.dot(g_rotated)) / m.norm();
    // m = ((u-cx)/f, -(v-cy)/f, -1): dm/df = (-m_x/f, -m_y/f, 0).
    g_f += -(g_m.x() * m.x() + g_m.y() * m.y()) / f;

    // Origin: o = R_init rho + t_init.
    const Vec3 g_rho = init.rotation.transpose() * g_worigin;

    Vec6 g_xi;
    g_xi.head<3>() = g_omega;
    g_xi.tail<3>() = g_rho;
    buf.xi[spec.frame] += g_xi;
    buf.delta_f[spec.frame] += g_f;
  }

  const GridField* field_;
  const CameraRig* rig_;
  PipelineConfig cfg_;
  const CounterRng* rng_;
  // Per-batch loss gradients, filled by forward and consumed by backward.
  mutable std::vector<Vec3> rgb_grad_;
  mutable std::vector<double> depth_grad_;
  mutable std::vector<double> grad_grad_;
  mutable int weight_count_ = 0;
};

}  // namespace ddr
