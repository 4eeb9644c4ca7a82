#pragma once

#include <string>
#include <vector>

#include "ddr/image_io.hpp"
#include "ddr/pipeline.hpp"

namespace ddr {

// Rendering weights of one image row: column x of the map is pixel x, row i
// is sample index i along that pixel's ray.
struct WeightMap {
  int width = 0;      // image columns
  int n_samples = 0;  // samples per ray
  int row = 0;
  int frame = 0;
  double max_weight = 0.0;  // per-map normalization record
  std::vector<double> values;  // raw weights, row-major [n_samples][width]

  double at(int x, int sample) const {
    return values[static_cast<size_t>(sample) * width + x];
  }
};

inline WeightMap weight_map(const GridField& field, const CameraRig& rig,
                            const PipelineConfig& cfg, int frame, int row) {
  require(frame >= 0 && frame < static_cast<int>(rig.frame_count()),
          "weight_map: frame out of range");
  require(row >= 0 && row < rig.cameras[frame].height, "weight_map: row out of range");
  const CounterRng rng(0);
  PipelineConfig pc = cfg;
  pc.jitter = false;  // deterministic bin centers for the visualization
  pc.lambdas = Lambdas{0, 0, 0, 0, 0};  // pure rendering, no supervision
  const RenderPipeline pipe(field, rig, pc, rng);
  WeightMap map;
  map.width = rig.cameras[frame].width;
  map.n_samples = pc.n_samples;
  map.row = row;
  map.frame = frame;
  map.values.assign(static_cast<size_t>(map.width) * pc.n_samples, 0.0);
  for (int x = 0; x < map.width; ++x) {
    RaySpec spec;
    spec.frame = frame;
    spec.px = Vec2(x + 0.5, row + 0.5);
    const RayCache c = pipe.forward_ray(spec, 0, x);
    for (int i = 0; i < pc.n_samples; ++i) {
      const double w = c.result.weights.w[i];
      map.values[static_cast<size_t>(i) * map.width + x] = w;
      map.max_weight = std::max(map.max_weight, w);
    }
  }
  return map;
}

// 8-bit PGM, brightness = weight / per-map max.
inline void export_pgm(const WeightMap& map, const std::string& path) {
  require(map.width > 0 && map.n_samples > 0, "export_pgm: empty map");
  ImageGray img(map.width, map.n_samples);
  // Maps whose best weight is numerically zero export as black instead of
  // amplifying float noise to full brightness.
  const double scale = map.max_weight > 1e-12 ? 1.0 / map.max_weight : 0.0;
  for (int y = 0; y < map.n_samples; ++y)
    for (int x = 0; x < map.width; ++x) img.at(x, y) = map.at(x, y) * scale;
  write_pgm(img, path);
}

// Full-image composite color and depth for one frame's camera.
inline void render_view(const GridField& field, const CameraRig& rig,
                        const PipelineConfig& cfg, int frame, ImageRGB& image,
                        ImageGray& depth) {
  require(frame >= 0 && frame < static_cast<int>(rig.frame_count()),
          "render_view: frame out of range");
  const CounterRng rng(0);
  PipelineConfig pc = cfg;
  pc.jitter = false;
  pc.lambdas = Lambdas{0, 0, 0, 0, 0};
  const RenderPipeline pipe(field, rig, pc, rng);
  const PinholeCamera& cam = rig.cameras[frame];
  image = ImageRGB(cam.width, cam.height);
  depth = ImageGray(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      RaySpec spec;
      spec.frame = frame;
      spec.px = Vec2(x + 0.5, y + 0.5);
      const RayCache c = pipe.forward_ray(spec, 0, static_cast<uint64_t>(y) * cam.width + x);
      image.at(x, y) = c.result.color;
      depth.at(x, y) = c.result.depth;
    }
}

// Per-ray shape statistics of a weight distribution.
struct RayShape {
  int peak_index = 0;
  double peak_mass_ratio = 0.0;  // mass within +-2 bins of the peak
  int modality = 0;              // local maxima above 10% of the peak
};

struct UnimodalityReport {
  std::vector<RayShape> rays;
  double mean_modality = 0.0;
  double mean_peak_mass = 0.0;
};

inline RayShape ray_shape(const std::vector<double>& w) {
  require(!w.empty(), "ray_shape: empty weights");
  RayShape s;
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    require(w[i] >= 0.0, "ray_shape: negative weight");
    total += w[i];
    if (w[i] > w[s.peak_index]) s.peak_index = static_cast<int>(i);
  }
  const double peak = w[s.peak_index];
  if (total <= 0.0 || peak <= 0.0) return s;
  double near = 0.0;
  for (int i = std::max(0, s.peak_index - 2);
       i <= std::min(static_cast<int>(w.size()) - 1, s.peak_index + 2); ++i)
    near += w[i];
  s.peak_mass_ratio = near / total;
  const double bar = 0.1 * peak;
  for (size_t i = 0; i < w.size(); ++i) {
    const double left = i == 0 ? -1.0 : w[i - 1];
    const double right = i + 1 == w.size() ? -1.0 : w[i + 1];
    if (w[i] >= bar && w[i] > left && w[i] >= right) ++s.modality;
  }
  return s;
}

inline UnimodalityReport unimodality(const GridField& field, const CameraRig& rig,
                                     const PipelineConfig& cfg, int frame,
                                     const std::vector<Vec2>& pixels) {
  require(!pixels.empty(), "unimodality: empty pixel set");
  const CounterRng rng(0);
  PipelineConfig pc = cfg;
  pc.jitter = false;
  pc.lambdas = Lambdas{0, 0, 0, 0, 0};
  const RenderPipeline pipe(field, rig, pc, rng);
  UnimodalityReport rep;
  for (size_t k = 0; k < pixels.size(); ++k) {
    RaySpec spec;
    spec.frame = frame;
    spec.px = pixels[k];
    const RayCache c = pipe.forward_ray(spec, 0, k);
    rep.rays.push_back(ray_shape(c.result.weights.w));
    rep.mean_modality += rep.rays.back().modality;
    rep.mean_peak_mass += rep.rays.back().peak_mass_ratio;
  }
  rep.mean_modality /= static_cast<double>(rep.rays.size());
  rep.mean_peak_mass /= static_cast<double>(rep.rays.size());
  return rep;
}

}  // namespace ddr
