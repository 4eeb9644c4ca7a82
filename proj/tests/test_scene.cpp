#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ddr/metrics.hpp"
#include "ddr/scene.hpp"
#include "ddr/trainer.hpp"
#include "ddr/viz.hpp"

using namespace ddr;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "ddr_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("single sphere dataset has a circular depth disc") {
  SceneSpec spec;
  MovingSphere s;
  s.base.center = Vec3(0, 0, -3);
  s.base.radius = 0.8;
  s.base.color = Vec3(1, 0, 0);
  spec.spheres = {s};
  spec.frame_count = 1;
  spec.background_depth = 9.0;
  const CameraRig rig = small_baseline_rig(1, 48, 36, 40.0, 1, 0.0);
  const Dataset ds = generate(spec, rig);

  // Center of the disc: the ray near the principal point hits at about d - r
  // (the half-pixel offset of the ray center leaves a small excess).
  CHECK(ds.depths[0].at(24, 18) == Catch::Approx(3.0 - 0.8).margin(5e-3));
  CHECK((ds.images[0].at(24, 18) - Vec3(1, 0, 0)).norm() < 1e-9);
  // Image corner misses the sphere: background depth and color.
  CHECK(ds.depths[0].at(0, 0) == 9.0);
  CHECK(ds.images[0].at(0, 0).norm() == 0.0);

  // Every depth equals the per-pixel analytic first hit.
  const AnalyticField field = spec.at_frame(0);
  for (int y = 0; y < ds.height; ++y)
    for (int x = 0; x < ds.width; ++x) {
      const Ray ray = pixel_ray(rig.cameras[0], rig.effective_pose(0),
                                Vec2(x + 0.5, y + 0.5), 1e-4, 16.0);
      const double t = analytic_depth(field, ray);
      const double expected = t < 16.0 ? t : 9.0;
      CHECK(ds.depths[0].at(x, y) == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("zero-baseline rig repeats identical frames") {
  SceneSpec spec = two_spheres_spec(3);
  const CameraRig rig = small_baseline_rig(3, 32, 24, 30.0, 1, 0.0);
  const Dataset ds = generate(spec, rig);
  for (int fr = 1; fr < 3; ++fr) {
    CHECK(ds.depths[fr].pixels == ds.depths[0].pixels);
    for (size_t i = 0; i < ds.images[0].pixels.size(); ++i)
      CHECK(ds.images[fr].pixels[i] == ds.images[0].pixels[i]);
  }
}

TEST_CASE("a moving sphere translates its depth disc") {
  SceneSpec spec;
  MovingSphere s;
  s.base.center = Vec3(-0.5, 0, -3);
  s.base.radius = 0.5;
  s.velocity = Vec3(0.5, 0, 0);
  spec.spheres = {s};
  spec.frame_count = 3;
  const CameraRig rig = small_baseline_rig(3, 48, 36, 40.0, 1, 0.0);
  const Dataset ds = generate(spec, rig);
  for (int fr = 0; fr < 3; ++fr) {
    const AnalyticField field = spec.at_frame(fr);
    // Column of the disc center moves right with the sphere.
    const double cx = -0.5 + 0.5 * fr;
    const double px = 24.0 + 40.0 * cx / 3.0;  // project (cx, 0, -3)
    const Ray ray = pixel_ray(rig.cameras[fr], rig.effective_pose(fr),
                              Vec2(px, 18.0), 1e-4, 16.0);
    CHECK(analytic_depth(field, ray) < 3.0);
    const int ix = std::clamp(static_cast<int>(px), 0, 47);
    CHECK(ds.depths[fr].at(ix, 18) < 3.0);
  }
  // Frame 0's disc center is empty space by frame 2.
  CHECK(ds.depths[0].at(17, 18) < 3.0);
  CHECK(ds.depths[2].at(17, 18) == Catch::Approx(spec.background_depth));
}

TEST_CASE("dataset save/load round-trips within quantization") {
  const SceneSpec spec = two_spheres_spec(3);
  const CameraRig rig = small_baseline_rig(3, 40, 30, 35.0);
  const Dataset ds = generate(spec, rig);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir.string());
  const Dataset back = load_dataset(dir.string());
  REQUIRE(back.frame_count() == 3);
  CHECK(back.width == 40);
  for (int fr = 0; fr < 3; ++fr) {
    // Depth is lossless (f32 PFM of f32-representable values).
    for (size_t i = 0; i < ds.depths[fr].pixels.size(); ++i)
      CHECK(back.depths[fr].pixels[i] ==
            static_cast<float>(ds.depths[fr].pixels[i]));
    // Images go through 8-bit PNG.
    for (size_t i = 0; i < ds.images[fr].pixels.size(); ++i)
      CHECK((back.images[fr].pixels[i] - ds.images[fr].pixels[i]).lpNorm<Eigen::Infinity>() <=
            0.5 / 255.0 + 1e-12);
    CHECK(back.rig.cameras[fr].f_init == ds.rig.cameras[fr].f_init);
    CHECK((back.rig.init_poses[fr].translation - ds.rig.init_poses[fr].translation)
              .norm() < 1e-12);
  }
}

TEST_CASE("loading reports missing files and bad rotations") {
  const SceneSpec spec = two_spheres_spec(2);
  const CameraRig rig = small_baseline_rig(2, 16, 16, 20.0);
  const Dataset ds = generate(spec, rig);

  const fs::path dir1 = temp_dir("missing_depth");
  save_dataset(ds, dir1.string());
  fs::remove(dir1 / "depth" / "001.pfm");
  CHECK_THROWS_WITH(load_dataset(dir1.string()),
                    Catch::Matchers::ContainsSubstring("001.pfm"));

  const fs::path dir2 = temp_dir("bad_rotation");
  save_dataset(ds, dir2.string());
  nlohmann::json cams = cameras_to_json(ds.rig);
  cams["frames"][0]["rotation"][0] = 2.0;
  std::ofstream(dir2 / "cameras.json") << cams.dump();
  CHECK_THROWS_WITH(load_dataset(dir2.string()),
                    Catch::Matchers::ContainsSubstring("orthonormal"));
}

TEST_CASE("affine depth alignment") {
  ImageGray rel(8, 8);
  for (int i = 0; i < 64; ++i) rel.pixels[i] = 0.1 * i + 1.0;

  // Already metric: identity fit.
  std::vector<std::pair<size_t, double>> refs;
  for (size_t i : {3ul, 17ul, 40ul, 60ul}) refs.push_back({i, rel.pixels[i]});
  const ImageGray same = align_depth(rel, refs);
  for (int i = 0; i < 64; ++i)
    CHECK(same.pixels[i] == Catch::Approx(rel.pixels[i]).margin(1e-9));

  // rel = 2 metric - 3  =>  metric = 0.5 rel + 1.5.
  refs.clear();
  for (size_t i : {5ul, 20ul, 55ul}) refs.push_back({i, 0.5 * rel.pixels[i] + 1.5});
  const ImageGray fixed = align_depth(rel, refs);
  for (int i = 0; i < 64; ++i)
    CHECK(fixed.pixels[i] == Catch::Approx(0.5 * rel.pixels[i] + 1.5).margin(1e-9));

  CHECK_THROWS_AS(align_depth(rel, {{0, 1.0}}), Error);
  ImageGray flat(4, 4, 2.0);
  CHECK_THROWS_AS(align_depth(flat, {{0, 1.0}, {5, 2.0}}), Error);
}

TEST_CASE("grid fit to the scene ground truth reproduces the analytic images") {
  // Capacity check at 64^3. Baking alone is silhouette-limited (grazing rays
  // pick up opacity from partially occupied shell voxels), so the bake seeds
  // a short image fit that places edges at sub-voxel positions. The view is
  // chosen so a pixel is wider than a voxel; the grid then out-resolves it.
  const SceneSpec spec = two_spheres_spec(1);
  const CameraRig base_rig = small_baseline_rig(1, 48, 36, 30.0, 1, 0.0);
  const Dataset ds = generate(spec, base_rig);
  GridField field = bake_field(spec, Eigen::Vector3i(64, 64, 64),
                               base_rig.cameras[0], true, 1.0, Vec3(-1, -1, -1),
                               Vec3(1, 1, 1), 400.0, 8.0);

  PipelineConfig pc;
  pc.n_samples = 128;
  pc.use_ndc = true;
  pc.t_near = 1.0;
  pc.t_far = 16.0;
  pc.lambdas = Lambdas{0, 0, 0, 0, 0};
  ImageRGB img;
  ImageGray depth;
  CameraRig rig = base_rig;
  render_view(field, rig, pc, 0, img, depth);
  const double baked_db = psnr(img, ds.images[0]);
  INFO("baked-field PSNR " << baked_db);
  CHECK(baked_db > 14.0);

  TrainConfig cfg;
  cfg.iterations = 400;
  cfg.batch_size = 1024;
  cfg.samples_per_ray = 128;
  cfg.lr_field = 3e-2;
  cfg.lr_camera = 0.0;
  cfg.seed = 7;
  cfg.log_every = 100;
  cfg.grid_resolution = Eigen::Vector3i(64, 64, 64);
  cfg.use_ndc = true;
  cfg.t_near = 1.0;
  cfg.t_far = 16.0;
  cfg.run_length = 32;
  cfg.lambdas = Lambdas{1, 0, 0, 0, 0};
  TrainState state(field, rig);
  const TrainResult res = train(ds, cfg, field, rig, state);
  REQUIRE_FALSE(res.aborted);

  render_view(field, rig, pc, 0, img, depth);
  const double fit_db = psnr(img, ds.images[0]);
  INFO("fitted-field PSNR " << fit_db);
  CHECK(fit_db > 35.0);
}
