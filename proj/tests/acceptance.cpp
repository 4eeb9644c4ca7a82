// End-to-end acceptance runner: one numbered check per line, exit 0 only if
// all pass. Heavy fits (checks 6 and 8) share their training runs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddr/config.hpp"
#include "ddr/gradcheck.hpp"
#include "ddr/metrics.hpp"
#include "ddr/scene.hpp"
#include "ddr/trainer.hpp"
#include "ddr/viz.hpp"

namespace fs = std::filesystem;
using namespace ddr;

namespace {

int failures = 0;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %2d %-28s %s\n", ok ? "[PASS]" : "[FAIL]", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- check 1

void check_gradient_suite() {
  const double t0 = now_seconds();
  std::ostringstream table;
  const GradCheckSummary summary = run_gradcheck(table, 20);
  const double secs = now_seconds() - t0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu ops, %.0fs (budget 120s)",
                summary.worst.size(), secs);
  const bool ok = summary.all_passed && secs < 120.0;
  report(1, "gradient suite", ok, buf);
  if (!summary.all_passed) std::fputs(table.str().c_str(), stdout);
}

// ---------------------------------------------------------------- check 2

void check_conservation() {
  CounterRng rng(901);
  GridField field(Eigen::Vector3i(16, 16, 16), Vec3(-2, -2, -2), Vec3(2, 2, 2), 1);
  for (size_t i = 0; i < field.sigma_params().size(); ++i)
    field.sigma_params()[i] = -3.0 + 6.0 * rng.uniform(rng_stream::kTest, 0, i, 0);

  double worst = 0.0;
  for (int r = 0; r < 10000; ++r) {
    Ray ray;
    for (int k = 0; k < 3; ++k) {
      ray.origin[k] = -1.5 + 3.0 * rng.uniform(rng_stream::kTest, 1, r, k);
      ray.direction[k] = -1.0 + 2.0 * rng.uniform(rng_stream::kTest, 2, r, k);
    }
    if (ray.direction.norm() < 1e-3) ray.direction = Vec3(0, 0, -1);
    ray.direction.normalize();
    ray.t_near = 0.1;
    ray.t_far = 6.0;
    const RaySampling s = stratified_sample(ray, 64, &rng, 3, r);
    std::vector<double> sigma(s.t.size());
    std::vector<Vec3> color(s.t.size(), Vec3::Zero());
    for (size_t i = 0; i < s.t.size(); ++i)
      sigma[i] = field.query(Vec3(ray.origin + s.t[i] * ray.direction), 0).sigma;
    const RenderResult res = render_samples(s, sigma, color);
    double total = res.residual_transmittance;
    for (double w : res.weights.w) total += w;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |sum w + T_res - 1| = %.3g over 1e4 rays", worst);
  report(2, "weight conservation", worst <= 1e-6, buf);
}

// ---------------------------------------------------------------- check 3

void check_gumbel() {
  // (a) argmax of g_i + log w_i is categorical(w): chi-square at 0.01.
  const std::vector<double> w{0.02, 0.05, 0.08, 0.10, 0.15, 0.20, 0.25, 0.15};
  const int trials = 100000;
  std::vector<int> counts(w.size(), 0);
  CounterRng rng(902);
  for (int t = 0; t < trials; ++t) {
    int arg = 0;
    double best = -1e300;
    for (size_t i = 0; i < w.size(); ++i) {
      const double g = gumbel_noise(rng.uniform(rng_stream::kTest, 4, t, i));
      const double z = g + std::log(w[i]);
      if (z > best) {
        best = z;
        arg = static_cast<int>(i);
      }
    }
    ++counts[arg];
  }
  double chi2 = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    const double expected = trials * w[i];
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  const double critical = 18.4753;  // chi-square, 7 dof, alpha = 0.01
  const bool chi_ok = chi2 < critical;

  // (b) invariance to positive rescaling with fixed noise. The identity is
  // exact in the algebra; in floats log(c*w) rounds, so assert to 1e-12.
  std::vector<double> g(w.size());
  for (size_t i = 0; i < g.size(); ++i)
    g[i] = gumbel_noise(rng.uniform(rng_stream::kTest, 5, 0, i));
  const std::vector<double> base = gumbel_softmax(w, g, 0.7);
  bool scale_ok = true;
  double scale_err = 0.0;
  for (double c : {0.25, 3.7, 1024.0}) {
    std::vector<double> ws(w.size());
    for (size_t i = 0; i < w.size(); ++i) ws[i] = c * w[i];
    const std::vector<double> out = gumbel_softmax(ws, g, 0.7);
    for (size_t i = 0; i < w.size(); ++i)
      scale_err = std::max(scale_err, std::abs(out[i] - base[i]));
  }
  scale_ok = scale_err <= 1e-12;

  // (c) max soft weight approaches 1 monotonically as epsilon shrinks.
  bool anneal_ok = true;
  double prev = 0.0;
  double last = 0.0;
  for (double eps : {2.0, 0.5, 0.1, 0.01}) {
    const std::vector<double> out = gumbel_softmax(w, g, eps);
    const double m = *std::max_element(out.begin(), out.end());
    anneal_ok = anneal_ok && m > prev;
    prev = m;
    last = m;
  }
  anneal_ok = anneal_ok && last > 0.999;

  char buf[128];
  std::snprintf(buf, sizeof buf,
                "chi2 %.2f < %.2f, rescale err %.1e, anneal max %.6f", chi2,
                critical, scale_err, last);
  report(3, "gumbel correctness", chi_ok && scale_ok && anneal_ok, buf);
}

// ---------------------------------------------------------------- check 4

double triangle_cdf(double center, double delta, double x) {
  if (x <= center - delta) return 0.0;
  if (x >= center + delta) return 1.0;
  if (x <= center) {
    const double a = x - (center - delta);
    return a * a / (2.0 * delta * delta);
  }
  const double b = (center + delta) - x;
  return 1.0 - b * b / (2.0 * delta * delta);
}

void check_mixture() {
  // pdf integrates to 1.
  WeightDistribution dist;
  CounterRng rng(903);
  const int n = 32;
  for (int i = 0; i < n; ++i) {
    dist.t.push_back((i + 0.5) / n);
    dist.w.push_back(rng.uniform(rng_stream::kTest, 6, 0, i));
  }
  const TriangularMixture mix =
      TriangularMixture::from_distribution(dist, mixture_delta(dist), 1e-8);
  const double lo = mix.centers.front() - mix.delta;
  const double hi = mix.centers.back() + mix.delta;
  const int steps = 2000000;
  double integral = 0.0;
  double prev = mixture_pdf(mix, lo);
  for (int i = 1; i <= steps; ++i) {
    const double x = lo + (hi - lo) * i / steps;
    const double p = mixture_pdf(mix, x);
    integral += 0.5 * (prev + p) * (hi - lo) / steps;
    prev = p;
  }
  const bool integral_ok = std::abs(integral - 1.0) <= 1e-4;

  // inverse-CDF draws match the triangle density per bin.
  const double center = 0.3, delta = 0.05;
  const int bins = 20, draws = 1000000;
  std::vector<int> hist(bins, 0);
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform(rng_stream::kTest, 7, i, 0);
    const double x = sample_triangle(center, delta, u);
    int b = static_cast<int>((x - (center - delta)) / (2.0 * delta) * bins);
    b = std::min(std::max(b, 0), bins - 1);
    ++hist[b];
  }
  // Bin deviation measured in probability mass (percentage points).
  double worst_dev = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double x0 = center - delta + 2.0 * delta * b / bins;
    const double x1 = center - delta + 2.0 * delta * (b + 1) / bins;
    const double expected = triangle_cdf(center, delta, x1) -
                            triangle_cdf(center, delta, x0);
    worst_dev = std::max(worst_dev, std::abs(hist[b] / double(draws) - expected));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "integral err %.2g, worst bin dev %.4f%%",
                std::abs(integral - 1.0), 100.0 * worst_dev);
  report(4, "triangular mixture", integral_ok && worst_dev < 0.01, buf);
}

// ---------------------------------------------------------------- check 5

void check_shape_separation() {
  // 32-bin ray; both distributions have composite depth exactly at depth_gt.
  const int n = 32;
  WeightDistribution bimodal, onehot;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    bimodal.t.push_back(t);
    onehot.t.push_back(t);
    bimodal.w.push_back(i == 8 || i == 24 ? 0.5 : 0.0);
    onehot.w.push_back(i == 16 ? 1.0 : 0.0);
  }
  const double depth_gt = onehot.t[16];  // dyadic, so the sums are exact

  double d_bi = 0.0, d_one = 0.0;
  for (int i = 0; i < n; ++i) {
    d_bi += bimodal.w[i] * bimodal.t[i];
    d_one += onehot.w[i] * onehot.t[i];
  }
  const double depth_loss_bi = (d_bi - depth_gt) * (d_bi - depth_gt);
  const bool depth_ok = depth_loss_bi == 0.0 && d_one == depth_gt;

  // Brute-force expectation of the per-draw error, 1e6 draws each.
  GumbelConfig cfg;
  cfg.n_samples = 1000000;
  CounterRng rng(904);
  const double t0 = now_seconds();
  const double bi = weight_loss(bimodal, depth_gt, cfg, rng, 0, 0).loss;
  const double one = weight_loss(onehot, depth_gt, cfg, rng, 0, 1).loss;
  const double secs = now_seconds() - t0;
  const double ratio = bi / one;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "depth loss 0 both, weight loss ratio %.1fx (need 5x), %.0fs",
                ratio, secs);
  report(5, "shape vs expectation", depth_ok && ratio >= 5.0 && secs < 60.0, buf);
}

// ----------------------------------------------------- checks 6 and 8 (fits)

struct FitOutcome {
  double mean_modality = 0.0;
  double peak_within_2 = 0.0;
  double mean_abs_lapl = 0.0;
  int rays = 0;
};

FitOutcome toy_fit(const SceneSpec& spec, const Dataset& ds, const CameraRig& base_rig,
                   const Lambdas& lam, int iterations) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.batch_size = 256;
  cfg.samples_per_ray = 64;
  cfg.lr_field = 1e-2;
  cfg.lr_camera = 0.0;
  cfg.seed = 42;
  cfg.log_every = 2000;
  cfg.grid_resolution = Eigen::Vector3i(48, 48, 48);
  cfg.use_ndc = true;
  cfg.t_near = 1.0;
  cfg.t_far = 16.0;
  cfg.jitter = true;
  cfg.run_length = 32;
  cfg.lambdas = lam;

  GridField field(cfg.grid_resolution, Vec3(-1, -1, -1), Vec3(1, 1, 1),
                  static_cast<int>(ds.frame_count()));
  CameraRig rig = base_rig;
  TrainState state(field, rig);
  const TrainResult res = train(ds, cfg, field, rig, state);
  require(!res.aborted, "toy fit aborted: " + res.abort_reason);

  PipelineConfig pc = cfg.pipeline();
  pc.jitter = false;
  pc.lambdas = Lambdas{0, 0, 0, 0, 0};

  FitOutcome out;
  double modality_sum = 0.0;
  int peak_ok = 0;
  for (size_t fr = 0; fr < ds.frame_count(); ++fr) {
    const AnalyticField af = spec.at_frame(static_cast<int>(fr));
    std::vector<Vec2> pixels;
    std::vector<double> gt_bin;
    for (int y = 0; y < ds.height; ++y)
      for (int x = 0; x < ds.width; ++x) {
        const Vec2 px(x + 0.5, y + 0.5);
        const Ray wray = pixel_ray(base_rig.cameras[fr], base_rig.effective_pose(fr),
                                   px, cfg.t_near, cfg.t_far);
        const double d = analytic_depth(af, wray);
        if (d <= 0.0 || d > 5.0) continue;  // keep sphere (foreground) rays
        pixels.push_back(px);
        gt_bin.push_back(ndc_ray_param(wray, base_rig.cameras[fr], cfg.ndc_near, d) *
                         pc.n_samples);
      }
    const UnimodalityReport rep =
        unimodality(field, rig, pc, static_cast<int>(fr), pixels);
    for (size_t i = 0; i < rep.rays.size(); ++i) {
      modality_sum += rep.rays[i].modality;
      if (std::abs(rep.rays[i].peak_index + 0.5 - gt_bin[i]) <= 2.0) ++peak_ok;
      ++out.rays;
    }
    ImageRGB img;
    ImageGray depth;
    render_view(field, rig, pc, static_cast<int>(fr), img, depth);
    out.mean_abs_lapl += mean_abs_laplacian(depth) / ds.frame_count();
  }
  out.mean_modality = modality_sum / out.rays;
  out.peak_within_2 = double(peak_ok) / out.rays;
  return out;
}

void check_toy_fits() {
  const int iterations = 20000;
  const SceneSpec spec = two_spheres_spec(3);
  // Three views spanning 1% of the ~2 unit scene depth.
  const CameraRig rig = small_baseline_rig(3, 48, 36, 30.0, 3, 0.02);
  const Dataset ds = generate(spec, rig);

  const double t0 = now_seconds();
  const FitOutcome plain = toy_fit(spec, ds, rig, Lambdas{1, 0.1, 0, 0, 0}, iterations);
  const FitOutcome ddr =
      toy_fit(spec, ds, rig, Lambdas{1, 0.1, 0.1, 0.01, 0}, iterations);
  const double secs6 = now_seconds() - t0;

  // Regression thresholds pinned from the first oracle run of this experiment
  // (20k iterations: modality 4.62 plain vs 1.01 with DDR).
  const double modality_margin = 1.5;
  const bool modality_ok =
      plain.mean_modality - ddr.mean_modality >= modality_margin;
  const bool peak_ok = ddr.peak_within_2 >= 0.90;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "modality %.2f vs %.2f (margin %.2f), peak hits %.1f%% of %d rays, "
                "%.0fs (budget 1800s)",
                plain.mean_modality, ddr.mean_modality, modality_margin,
                100.0 * ddr.peak_within_2, ddr.rays, secs6);
  report(6, "ddr recovery", modality_ok && peak_ok && secs6 < 1800.0, buf);

  // The smoothing term is judged on top of the DDR config: that is where the
  // depth map picks up sampling noise worth removing (a photometric-or-depth
  // only fit renders smooth fog instead). Margin pinned from the first oracle
  // run: |laplacian| 0.0636 without the term, 0.0527 with it.
  const double t1 = now_seconds();
  const FitOutcome ddr_grad =
      toy_fit(spec, ds, rig, Lambdas{1, 0.1, 0.1, 0.01, 0.1}, iterations);
  const double secs8 = now_seconds() - t1;
  const double lapl_margin = 0.005;
  const bool lapl_ok = ddr_grad.mean_abs_lapl <= ddr.mean_abs_lapl - lapl_margin;
  std::snprintf(buf, sizeof buf,
                "depth |laplacian| %.5f -> %.5f (margin %.5f), %.0fs",
                ddr.mean_abs_lapl, ddr_grad.mean_abs_lapl, lapl_margin, secs8);
  report(8, "gradient-loss smoothing", lapl_ok, buf);
}

// ---------------------------------------------------------------- check 7

void check_camera_recovery() {
  const double t0 = now_seconds();
  // Near-field spheres spread across depth 1.8-4.4 plus the checkered slab:
  // parallax at several depths is what separates rotation, translation, and
  // focal from one another. NDC sampling is avoided on purpose — a ray cast
  // from the warp camera's own position cancels the focal out of the warped
  // ray exactly, which would leave no focal signal at all.
  SceneSpec spec = two_spheres_spec(3);
  spec.spheres.clear();
  const Vec3 centers[4] = {Vec3(-0.9, 0.25, -1.8), Vec3(0.8, -0.3, -2.6),
                           Vec3(0.1, 0.55, -3.5), Vec3(-0.6, -0.65, -4.4)};
  const double radii[4] = {0.45, 0.5, 0.55, 0.6};
  const Vec3 colors[4] = {Vec3(0.85, 0.25, 0.2), Vec3(0.2, 0.45, 0.85),
                          Vec3(0.9, 0.8, 0.2), Vec3(0.3, 0.75, 0.4)};
  for (int i = 0; i < 4; ++i) {
    MovingSphere ms;
    ms.base.center = centers[i];
    ms.base.radius = radii[i];
    ms.base.color = colors[i];
    spec.spheres.push_back(ms);
  }
  const double f_true = 40.0;
  const CameraRig true_rig = small_baseline_rig(3, 64, 48, f_true, 3, 0.04);
  const GridField field =
      bake_field(spec, Eigen::Vector3i(64, 64, 64), true_rig.cameras[0], false, 1.0,
                 Vec3(-4, -3, -8.5), Vec3(4, 3, -1), 80.0, 2.0);

  TrainConfig cfg;
  cfg.batch_size = 2048;
  cfg.samples_per_ray = 32;
  cfg.lr_field = 0.0;  // field frozen at ground truth
  cfg.seed = 42;
  cfg.log_every = 1000;
  cfg.grid_resolution = Eigen::Vector3i(64, 64, 64);
  cfg.use_ndc = false;
  cfg.t_near = 1.0;
  cfg.t_far = 10.0;
  // Supervision below is rendered without jitter; jittered training rays
  // against it would bias the camera parameters.
  cfg.jitter = false;
  cfg.run_length = 32;
  cfg.learn_cameras = true;
  cfg.lambdas = Lambdas{1, 10, 0, 0, 0};

  // Supervision rendered from the frozen field at the true cameras. Depth
  // maps stay in render-ray units so they match the depth the loss compares.
  Dataset ds = generate(spec, true_rig);
  ds.depths_in_render_space = true;
  double depth_sum = 0.0;
  size_t depth_n = 0;
  {
    PipelineConfig pc = cfg.pipeline();
    pc.learn_cameras = false;
    pc.lambdas = Lambdas{0, 0, 0, 0, 0};
    CameraRig rig_copy = true_rig;
    for (size_t fr = 0; fr < ds.frame_count(); ++fr) {
      render_view(field, rig_copy, pc, static_cast<int>(fr), ds.images[fr],
                  ds.depths[fr]);
      for (double d : ds.depths[fr].pixels) depth_sum += d;
      depth_n += ds.depths[fr].pixels.size();
    }
  }
  const double mean_depth = depth_sum / depth_n;

  // Perturb: 0.5 degree rotation, 0.5%-of-depth translation, focal +2%.
  const double rot_mag = 0.5 * M_PI / 180.0;
  const double trans_mag = 0.005 * mean_depth;
  const double focal_mag = 0.02 * f_true;
  CameraRig rig = true_rig;
  const Vec3 axes[3] = {Vec3(1, 0, 0), Vec3(0, 1, 1).normalized(),
                        Vec3(1, -1, 0).normalized()};
  const Vec3 dirs[3] = {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  for (int fr = 0; fr < 3; ++fr) {
    rig.init_poses[fr].rotation =
        rig.init_poses[fr].rotation * so3_exp(rot_mag * axes[fr]);
    rig.init_poses[fr].translation += trans_mag * dirs[fr];
    rig.cameras[fr].f_init += focal_mag;
  }
  ds.rig = rig;

  // The focal/dolly pair forms a long shallow valley; a staged learning-rate
  // anneal drains it where a single constant rate stalls.
  GridField trained = field;
  TrainState state(trained, rig);
  const double stage_lr[3] = {2e-3, 4e-4, 8e-5};
  const int stage_it[3] = {3000, 1000, 500};
  bool aborted = false;
  for (int s = 0; s < 3; ++s) {
    cfg.lr_camera = stage_lr[s];
    cfg.iterations = stage_it[s];
    cfg.seed = 42 + s;
    const TrainResult res = train(ds, cfg, trained, rig, state);
    aborted = aborted || res.aborted;
  }

  double worst_rot = 0.0, worst_trans = 0.0, worst_focal = 0.0;
  for (int fr = 0; fr < 3; ++fr) {
    const Pose eff = rig.effective_pose(fr);
    const Mat3 dR = true_rig.init_poses[fr].rotation.transpose() * eff.rotation;
    const double angle =
        std::acos(std::clamp((dR.trace() - 1.0) / 2.0, -1.0, 1.0));
    worst_rot = std::max(worst_rot, angle);
    worst_trans = std::max(
        worst_trans, (eff.translation - true_rig.init_poses[fr].translation).norm());
    worst_focal = std::max(worst_focal,
                           std::abs(effective_focal(rig.cameras[fr]) - f_true));
  }
  const double secs = now_seconds() - t0;
  const bool ok = !aborted && worst_rot <= 0.1 * rot_mag &&
                  worst_trans <= 0.1 * trans_mag && worst_focal <= 0.1 * focal_mag &&
                  secs < 300.0;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "residual rot %.1f%%, trans %.1f%%, focal %.1f%% of perturbation, "
                "%.0fs (budget 300s)",
                100.0 * worst_rot / rot_mag, 100.0 * worst_trans / trans_mag,
                100.0 * worst_focal / focal_mag, secs);
  report(7, "camera recovery", ok, buf);
}

// ---------------------------------------------------------------- check 9

void check_determinism(const fs::path& tmp) {
  TrainConfig cfg;
  cfg.iterations = 150;
  cfg.batch_size = 64;
  cfg.samples_per_ray = 32;
  cfg.lr_field = 5e-3;
  cfg.lr_camera = 1e-3;
  cfg.seed = 17;
  cfg.log_every = 10;
  cfg.grid_resolution = Eigen::Vector3i(8, 8, 8);
  cfg.use_ndc = true;
  cfg.t_near = 1.0;
  cfg.t_far = 16.0;
  cfg.jitter = true;
  cfg.run_length = 8;
  cfg.learn_cameras = true;
  cfg.lambdas = Lambdas{1, 0.1, 0.1, 0.01, 0.1};
  cfg.gumbel.n_samples = 4;

  const SceneSpec spec = two_spheres_spec(2);
  const CameraRig base_rig = small_baseline_rig(2, 32, 24, 20.0, 2, 0.04);
  const Dataset ds = generate(spec, base_rig);

  auto run = [&](uint64_t seed, const fs::path& ckpt) {
    TrainConfig c = cfg;
    c.seed = seed;
    GridField field(c.grid_resolution, Vec3(-1, -1, -1), Vec3(1, 1, 1), 2);
    CameraRig rig = base_rig;
    TrainState state(field, rig);
    const TrainResult res = train(ds, c, field, rig, state, ckpt.string());
    require(!res.aborted, "determinism run aborted");
    return res.metrics_csv;
  };
  const std::string csv_a = run(17, tmp / "det_a.bin");
  const std::string csv_b = run(17, tmp / "det_b.bin");
  const std::string csv_c = run(18, tmp / "det_c.bin");
  const bool same = csv_a == csv_b &&
                    read_file(tmp / "det_a.bin") == read_file(tmp / "det_b.bin");
  const bool diff = csv_a != csv_c;
  report(9, "determinism", same && diff,
         same ? "same seed bitwise identical, other seed differs"
              : "same-seed runs diverged");
}

// ---------------------------------------------------------------- check 10

void check_round_trips(const fs::path& tmp) {
  bool ok = true;
  std::string detail = "dataset, checkpoint, pgm, pfm all within bounds";

  // Dataset: PNG within 8-bit quantization, PFM within f32.
  const SceneSpec spec = two_spheres_spec(2);
  const CameraRig rig = small_baseline_rig(2, 32, 24, 20.0, 2, 0.04);
  const Dataset ds = generate(spec, rig);
  const fs::path db = tmp / "roundtrip_ds";
  save_dataset(ds, db.string());
  const Dataset back = load_dataset(db.string());
  for (size_t fr = 0; fr < ds.frame_count() && ok; ++fr) {
    for (size_t i = 0; i < ds.images[fr].pixels.size(); ++i) {
      const Vec3 d = back.images[fr].pixels[i] - ds.images[fr].pixels[i];
      if (d.cwiseAbs().maxCoeff() > 0.5 / 255.0 + 1e-12) {
        ok = false;
        detail = "dataset image exceeded 8-bit quantization bound";
        break;
      }
    }
    for (size_t i = 0; i < ds.depths[fr].pixels.size(); ++i)
      if (back.depths[fr].pixels[i] !=
          static_cast<double>(static_cast<float>(ds.depths[fr].pixels[i]))) {
        ok = false;
        detail = "dataset depth not f32-exact";
        break;
      }
  }

  // Checkpoint: exact (parameters are f32-quantized in memory).
  if (ok) {
    GridField field(Eigen::Vector3i(6, 5, 4), Vec3(-1, -1, -1), Vec3(1, 1, 1), 2);
    CounterRng rng(905);
    for (size_t i = 0; i < field.sigma_params().size(); ++i)
      field.sigma_params()[i] = static_cast<double>(static_cast<float>(
          rng.uniform(rng_stream::kTest, 8, i, 0) * 4.0 - 2.0));
    for (size_t i = 0; i < field.color_params().size(); ++i)
      field.color_params()[i] = static_cast<double>(static_cast<float>(
          rng.uniform(rng_stream::kTest, 9, i, 0) * 2.0 - 1.0));
    CameraRig r2 = rig;
    r2.residuals[0].xi << 0.01, -0.02, 0.03, 0.004, -0.005, 0.006;
    r2.cameras[1].delta_f = 0.25;
    TrainState state(field, r2);
    state.step = 7;
    const fs::path cp = tmp / "roundtrip.bin";
    save_checkpoint(cp.string(), field, &r2, &state);
    CameraRig r3 = rig;
    TrainState s3;
    const GridField loaded = load_checkpoint(cp.string(), &r3, &s3);
    ok = loaded.sigma_params() == field.sigma_params() &&
         loaded.color_params() == field.color_params() &&
         r3.residuals[0].xi == r2.residuals[0].xi &&
         r3.cameras[1].delta_f == r2.cameras[1].delta_f && s3.step == 7;
    if (!ok) detail = "checkpoint round-trip not exact";
  }

  // PGM: normalized weights within 8-bit quantization.
  if (ok) {
    WeightMap map;
    map.width = 9;
    map.n_samples = 7;
    map.values.resize(63);
    CounterRng rng(906);
    for (size_t i = 0; i < map.values.size(); ++i) {
      map.values[i] = rng.uniform(rng_stream::kTest, 10, i, 0);
      map.max_weight = std::max(map.max_weight, map.values[i]);
    }
    const fs::path pp = tmp / "roundtrip.pgm";
    export_pgm(map, pp.string());
    const ImageGray img = read_pgm(pp.string());
    for (size_t i = 0; i < map.values.size(); ++i)
      if (std::abs(img.pixels[i] - map.values[i] / map.max_weight) >
          0.5 / 255.0 + 1e-12) {
        ok = false;
        detail = "pgm round-trip exceeded quantization bound";
        break;
      }
  }

  // PFM: f32-exact.
  if (ok) {
    ImageGray g(5, 4);
    for (size_t i = 0; i < g.pixels.size(); ++i) g.pixels[i] = 0.37 * (i + 1);
    const fs::path fp = tmp / "roundtrip.pfm";
    write_pfm(g, fp.string());
    const ImageGray back_g = read_pfm(fp.string());
    for (size_t i = 0; i < g.pixels.size(); ++i)
      if (back_g.pixels[i] !=
          static_cast<double>(static_cast<float>(g.pixels[i]))) {
        ok = false;
        detail = "pfm round-trip not f32-exact";
        break;
      }
  }

  report(10, "format round-trips", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  const auto want = [&](int n) { return selected.empty() || selected.count(n); };

  const fs::path tmp = fs::temp_directory_path() / "ddr-acceptance";
  fs::create_directories(tmp);

  try {
    if (want(1)) check_gradient_suite();
    if (want(2)) check_conservation();
    if (want(3)) check_gumbel();
    if (want(4)) check_mixture();
    if (want(5)) check_shape_separation();
    if (want(7)) check_camera_recovery();
    if (want(9)) check_determinism(tmp);
    if (want(10)) check_round_trips(tmp);
    if (want(6) || want(8)) check_toy_fits();
  } catch (const std::exception& e) {
    std::printf("[FAIL] unhandled error: %s\n", e.what());
    ++failures;
  }
  std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
