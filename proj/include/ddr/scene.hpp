#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddr/field.hpp"
#include "ddr/geometry.hpp"
#include "ddr/image_io.hpp"
#include "ddr/pipeline.hpp"

namespace ddr {

// Primitives with a linear motion script: position offset velocity * frame.
struct MovingSphere {
  SpherePrim base;
  Vec3 velocity = Vec3::Zero();
};

struct MovingSlab {
  SlabPrim base;
  double z_velocity = 0.0;
};

struct SceneSpec {
  std::vector<MovingSphere> spheres;
  std::vector<MovingSlab> slabs;
  Vec3 background_color = Vec3::Zero();
  double background_depth = 8.0;  // reported where no primitive is hit
  int frame_count = 1;

  void check() const {
    require(frame_count >= 1, "SceneSpec: frame_count must be >= 1");
    require(!spheres.empty() || !slabs.empty(), "SceneSpec: no primitives");
  }

  AnalyticField at_frame(int frame) const {
    AnalyticField f;
    for (const auto& s : spheres) {
      SpherePrim p = s.base;
      p.center += s.velocity * frame;
      f.spheres.push_back(p);
    }
    for (const auto& s : slabs) {
      SlabPrim p = s.base;
      p.z_min += s.z_velocity * frame;
      p.z_max += s.z_velocity * frame;
      f.slabs.push_back(p);
    }
    return f;
  }
};

struct Dataset {
  int width = 0;
  int height = 0;
  double units = 1.0;
  // Depth maps are metric distance along the pixel ray unless this flag is
  // set, in which case they are already in render-ray parameter units.
  bool depths_in_render_space = false;
  std::vector<ImageRGB> images;
  std::vector<ImageGray> depths;
  CameraRig rig;

  size_t frame_count() const { return images.size(); }

  void check() const {
    require(!images.empty(), "Dataset: no frames");
    require(images.size() == depths.size() && images.size() == rig.frame_count(),
            "Dataset: per-frame arrays disagree");
    for (const auto& im : images)
      require(im.width == width && im.height == height, "Dataset: image size mismatch");
    for (const auto& d : depths)
      require(d.width == width && d.height == height, "Dataset: depth size mismatch");
  }
};

// Foreground spheres over a checkered backdrop plane. Depths around 2-3 for
// the spheres and 6 for the plane keep the forward-facing warp
// well-conditioned with near = 1.
inline SceneSpec two_spheres_spec(int frame_count = 3) {
  SceneSpec spec;
  spec.frame_count = frame_count;
  MovingSphere a;
  a.base.center = Vec3(-0.35, 0.1, -2.0);
  a.base.radius = 0.5;
  a.base.color = Vec3(0.85, 0.25, 0.2);
  MovingSphere b;
  b.base.center = Vec3(0.75, -0.25, -3.0);
  b.base.radius = 0.6;
  b.base.color = Vec3(0.2, 0.45, 0.85);
  spec.spheres = {a, b};
  MovingSlab back;
  back.base.z_min = -8.0;
  back.base.z_max = -6.0;
  back.base.color = Vec3(0.9, 0.9, 0.85);
  back.base.color2 = Vec3(0.35, 0.4, 0.35);
  back.base.checker_size = 1.5;
  spec.slabs = {back};
  spec.background_depth = 8.0;
  return spec;
}

// Near-stationary rig: cameras at identity rotation, translated along x by at
// most `baseline`, n_views distinct positions assigned to equal thirds (or
// n-ths) of the frame sequence.
inline CameraRig small_baseline_rig(int frame_count, int width, int height,
                                    double focal, int n_views = 3,
                                    double baseline = 0.04) {
  require(frame_count >= 1 && n_views >= 1, "small_baseline_rig: bad counts");
  CameraRig rig;
  for (int fr = 0; fr < frame_count; ++fr) {
    PinholeCamera cam;
    cam.width = width;
    cam.height = height;
    cam.f_init = focal;
    cam.principal_point = Vec2(width / 2.0, height / 2.0);
    const int view = std::min(fr * n_views / frame_count, n_views - 1);
    const double s = n_views == 1 ? 0.0 : view / double(n_views - 1) - 0.5;
    Pose pose;
    pose.translation = Vec3(s * 2.0 * baseline, 0.0, 0.0);
    rig.cameras.push_back(cam);
    rig.init_poses.push_back(pose);
    rig.residuals.emplace_back();
  }
  return rig;
}

// Exact ray-traced ground truth for every frame of the spec.
inline Dataset generate(const SceneSpec& spec, const CameraRig& rig,
                        double t_far = 16.0) {
  spec.check();
  rig.check();
  require(rig.frame_count() == static_cast<size_t>(spec.frame_count),
          "generate: rig/spec frame counts disagree");
  Dataset ds;
  ds.width = rig.cameras[0].width;
  ds.height = rig.cameras[0].height;
  ds.rig = rig;
  for (int fr = 0; fr < spec.frame_count; ++fr) {
    const AnalyticField field = spec.at_frame(fr);
    ImageRGB img(ds.width, ds.height);
    ImageGray depth(ds.width, ds.height);
    const Pose pose = rig.effective_pose(fr);
    for (int y = 0; y < ds.height; ++y)
      for (int x = 0; x < ds.width; ++x) {
        const Ray ray = pixel_ray(rig.cameras[fr], pose, Vec2(x + 0.5, y + 0.5),
                                  1e-4, t_far);
        double t;
        const Vec3 c = field.first_hit_color(ray, &t);
        const bool hit = t < t_far;
        img.at(x, y) = hit ? c : spec.background_color;
        depth.at(x, y) = hit ? t : spec.background_depth;
      }
    ds.images.push_back(std::move(img));
    ds.depths.push_back(std::move(depth));
  }
  ds.check();
  return ds;
}

namespace scene_detail {
inline std::string frame_name(size_t i, const char* ext) {
  std::ostringstream os;
  os << std::setw(3) << std::setfill('0') << i << ext;
  return os.str();
}
}  // namespace scene_detail

inline nlohmann::json cameras_to_json(const CameraRig& rig) {
  nlohmann::json frames = nlohmann::json::array();
  for (size_t i = 0; i < rig.frame_count(); ++i) {
    const PinholeCamera& cam = rig.cameras[i];
    const Pose& pose = rig.init_poses[i];
    nlohmann::json f;
    f["f_init"] = cam.f_init;
    f["principal_point"] = {cam.principal_point.x(), cam.principal_point.y()};
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot[r * 3 + c] = pose.rotation(r, c);
    f["rotation"] = rot;
    f["translation"] = {pose.translation.x(), pose.translation.y(),
                        pose.translation.z()};
    frames.push_back(f);
  }
  return nlohmann::json{{"frames", frames}};
}

inline CameraRig cameras_from_json(const nlohmann::json& j, int width, int height) {
  require(j.contains("frames") && j["frames"].is_array() && !j["frames"].empty(),
          "cameras_from_json: missing frames array");
  CameraRig rig;
  for (const auto& f : j["frames"]) {
    PinholeCamera cam;
    cam.width = width;
    cam.height = height;
    cam.f_init = f.at("f_init").get<double>();
    const auto pp = f.at("principal_point");
    cam.principal_point = Vec2(pp.at(0).get<double>(), pp.at(1).get<double>());
    Pose pose;
    const auto rot = f.at("rotation");
    require(rot.size() == 9, "cameras_from_json: rotation must have 9 entries");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot.at(r * 3 + c).get<double>();
    const auto tr = f.at("translation");
    pose.translation = Vec3(tr.at(0).get<double>(), tr.at(1).get<double>(),
                            tr.at(2).get<double>());
    require(pose_valid(pose, 1e-6), "cameras_from_json: non-orthonormal rotation");
    rig.cameras.push_back(cam);
    rig.init_poses.push_back(pose);
    rig.residuals.emplace_back();
  }
  return rig;
}

// Layout: frames/NNN.png, depth/NNN.pfm, cameras.json, meta.json.
inline void save_dataset(const Dataset& ds, const std::string& dir) {
  ds.check();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "depth");
  for (size_t i = 0; i < ds.frame_count(); ++i) {
    write_png(ds.images[i],
              (fs::path(dir) / "frames" / scene_detail::frame_name(i, ".png")).string());
    write_pfm(ds.depths[i],
              (fs::path(dir) / "depth" / scene_detail::frame_name(i, ".pfm")).string());
  }
  std::ofstream(fs::path(dir) / "cameras.json") << cameras_to_json(ds.rig).dump(2)
                                                << "\n";
  const nlohmann::json meta{{"frame_count", ds.frame_count()},
                            {"width", ds.width},
                            {"height", ds.height},
                            {"units", ds.units},
                            {"depths_in_render_space", ds.depths_in_render_space}};
  std::ofstream(fs::path(dir) / "meta.json") << meta.dump(2) << "\n";
}

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream meta_in(fs::path(dir) / "meta.json");
  require(meta_in.good(), "load_dataset: missing meta.json in " + dir);
  const nlohmann::json meta = nlohmann::json::parse(meta_in);
  Dataset ds;
  ds.width = meta.at("width").get<int>();
  ds.height = meta.at("height").get<int>();
  ds.units = meta.value("units", 1.0);
  ds.depths_in_render_space = meta.value("depths_in_render_space", false);
  const size_t n = meta.at("frame_count").get<size_t>();

  std::ifstream cam_in(fs::path(dir) / "cameras.json");
  require(cam_in.good(), "load_dataset: missing cameras.json in " + dir);
  ds.rig = cameras_from_json(nlohmann::json::parse(cam_in), ds.width, ds.height);
  require(ds.rig.frame_count() == n, "load_dataset: camera/frame count mismatch");

  for (size_t i = 0; i < n; ++i) {
    const std::string png =
        (fs::path(dir) / "frames" / scene_detail::frame_name(i, ".png")).string();
    const std::string pfm =
        (fs::path(dir) / "depth" / scene_detail::frame_name(i, ".pfm")).string();
    require(fs::exists(png), "load_dataset: missing frame " + png);
    require(fs::exists(pfm), "load_dataset: missing depth " + pfm);
    ds.images.push_back(read_png(png));
    ds.depths.push_back(read_pfm(pfm));
  }
  ds.check();
  return ds;
}

// Least-squares affine alignment of a relative depth map to metric reference
// points (linear pixel index, metric depth).
inline ImageGray align_depth(const ImageGray& relative,
                             const std::vector<std::pair<size_t, double>>& refs) {
  require(refs.size() >= 2, "align_depth: need at least 2 reference points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(refs.size());
  for (const auto& [idx, metric] : refs) {
    require(idx < relative.pixels.size(), "align_depth: reference pixel out of range");
    const double r = relative.pixels[idx];
    sx += r;
    sy += metric;
    sxx += r * r;
    sxy += r * metric;
  }
  const double det = n * sxx - sx * sx;
  require(std::abs(det) > 1e-12 * std::max(1.0, n * sxx),
          "align_depth: reference values are degenerate");
  const double s = (n * sxy - sx * sy) / det;
  const double b = (sy - s * sx) / n;
  ImageGray out = relative;
  for (double& v : out.pixels) v = s * v + b;
  return out;
}

// Fill a grid with the analytic scene's ground truth: occupancy-averaged
// density and the primitive albedo at each voxel center. With use_ndc the
// grid lives in the warped cube and voxel centers are pulled back through the
// inverse warp of the reference camera.
inline GridField bake_field(const SceneSpec& spec, const Eigen::Vector3i& resolution,
                            const PinholeCamera& ref_cam, bool use_ndc,
                            double ndc_near = 1.0,
                            const Vec3& bbox_min = Vec3(-1, -1, -1),
                            const Vec3& bbox_max = Vec3(1, 1, 1),
                            double sigma_solid = 400.0, double occupancy_power = 1.0) {
  spec.check();
  GridField grid(resolution, bbox_min, bbox_max, spec.frame_count,
                 softplus_inverse(1e-8));
  // Supersampled occupancy: density proportional to the occupied fraction of
  // the voxel's cell puts the interpolated iso-edge at sub-voxel positions.
  const int ss = 4;
  const Vec3 cell((bbox_max - bbox_min).array() /
                  (resolution.cast<double>().array() - 1.0));
  const size_t nx = resolution.x(), ny = resolution.y(), nz = resolution.z();
  for (int fr = 0; fr < spec.frame_count; ++fr) {
    const AnalyticField field = spec.at_frame(fr);
    const size_t base = grid.voxels_per_frame() * fr;
    std::vector<double> frac(grid.voxels_per_frame(), 0.0);
    std::vector<Vec3> albedo(grid.voxels_per_frame(), Vec3::Zero());
    size_t v = 0;
    for (size_t ix = 0; ix < nx; ++ix)
      for (size_t iy = 0; iy < ny; ++iy)
        for (size_t iz = 0; iz < nz; ++iz, ++v) {
          const Vec3 center(bbox_min.x() + cell.x() * ix, bbox_min.y() + cell.y() * iy,
                            bbox_min.z() + cell.z() * iz);
          int hits = 0;
          Vec3 csum = Vec3::Zero();
          for (int a = 0; a < ss; ++a)
            for (int b = 0; b < ss; ++b)
              for (int c = 0; c < ss; ++c) {
                const Vec3 q =
                    center + Vec3(cell.x() * (a + 0.5) / ss - cell.x() / 2,
                                  cell.y() * (b + 0.5) / ss - cell.y() / 2,
                                  cell.z() * (c + 0.5) / ss - cell.z() / 2);
                Vec3 p = q;
                if (use_ndc) {
                  if (q.z() >= 1.0 - 1e-9) continue;  // at infinity: vacuum
                  p = ndc_point_inverse(q, ref_cam, ndc_near);
                }
                const FieldSample s = field.query(p);
                if (s.sigma > 0.0) {
                  ++hits;
                  csum += s.color;
                }
              }
          if (hits == 0) continue;
          frac[v] = static_cast<double>(hits) / (ss * ss * ss);
          albedo[v] = csum / hits;
          grid.sigma_params()[base + v] =
              softplus_inverse(std::pow(frac[v], occupancy_power) * sigma_solid);
        }
    // Dilate albedo into the empty shell around surfaces so interpolation at
    // the surface does not blend toward the neutral vacuum color.
    std::vector<Vec3> painted = albedo;
    std::vector<bool> has_color(grid.voxels_per_frame(), false);
    v = 0;
    for (size_t ix = 0; ix < nx; ++ix)
      for (size_t iy = 0; iy < ny; ++iy)
        for (size_t iz = 0; iz < nz; ++iz, ++v) {
          if (frac[v] > 0.0) {
            has_color[v] = true;
            continue;
          }
          Vec3 csum = Vec3::Zero();
          double wsum = 0.0;
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dz = -1; dz <= 1; ++dz) {
                const long jx = static_cast<long>(ix) + dx, jy = static_cast<long>(iy) + dy,
                           jz = static_cast<long>(iz) + dz;
                if (jx < 0 || jy < 0 || jz < 0 || jx >= static_cast<long>(nx) ||
                    jy >= static_cast<long>(ny) || jz >= static_cast<long>(nz))
                  continue;
                const size_t u = (jx * ny + jy) * nz + jz;
                if (frac[u] > 0.0) {
                  csum += frac[u] * albedo[u];
                  wsum += frac[u];
                }
              }
          if (wsum > 0.0) {
            painted[v] = csum / wsum;
            has_color[v] = true;
          }
        }
    for (v = 0; v < grid.voxels_per_frame(); ++v) {
      if (!has_color[v]) continue;
      for (int c = 0; c < 3; ++c)
        grid.color_params()[(base + v) * 3 + c] =
            logit(std::clamp(painted[v][c], 1e-4, 1.0 - 1e-4));
    }
  }
  return grid;
}

}  // namespace ddr
