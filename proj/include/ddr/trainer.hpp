#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ddr/adam.hpp"
#include "ddr/config.hpp"
#include "ddr/scene.hpp"

namespace ddr {

// Optimizer state spanning all parameter groups. Packing order of the camera
// group: per frame [xi (6), delta_f].
struct TrainState {
  AdamState sigma;
  AdamState color;
  AdamState camera;
  int64_t step = 0;

  TrainState() = default;
  TrainState(const GridField& field, const CameraRig& rig)
      : sigma(field.sigma_param_count()),
        color(field.color_param_count()),
        camera(rig.frame_count() * 7) {}
};

namespace trainer_detail {

inline void write_f32(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) {
    const float f = static_cast<float>(x);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
}

inline void read_f32(std::istream& in, std::vector<double>& v) {
  for (double& x : v) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    x = f;
  }
}

inline void write_f64(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * 8));
}

inline void read_f64(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * 8));
}

// Parameters are quantized to f32 after every optimizer step, so the f32
// checkpoint blobs are lossless and a resumed run is bitwise identical.
inline void quantize_f32(std::vector<double>& v) {
  for (double& x : v) x = static_cast<float>(x);
}

}  // namespace trainer_detail

// One-line JSON header, then raw little-endian f32 blobs (sigma, color).
// With training state: per-frame camera residuals and the f64 Adam moments
// follow, enabling exact resume.
inline void save_checkpoint(const std::string& path, const GridField& field,
                            const CameraRig* rig = nullptr,
                            const TrainState* state = nullptr) {
  using namespace trainer_detail;
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_checkpoint: cannot open " + path);
  nlohmann::json header{
      {"resolution",
       {field.resolution().x(), field.resolution().y(), field.resolution().z()}},
      {"bbox",
       {{"min", {field.bbox_min().x(), field.bbox_min().y(), field.bbox_min().z()}},
        {"max", {field.bbox_max().x(), field.bbox_max().y(), field.bbox_max().z()}}}},
      {"frame_count", field.frame_count()},
      {"dtype", "f32"},
      {"byte_order", "little"},
      {"train_state", rig != nullptr && state != nullptr}};
  out << header.dump() << "\n";
  write_f32(out, field.sigma_params());
  write_f32(out, field.color_params());
  if (rig && state) {
    std::vector<double> cam(rig->frame_count() * 7);
    for (size_t i = 0; i < rig->frame_count(); ++i) {
      for (int k = 0; k < 6; ++k) cam[i * 7 + k] = rig->residuals[i].xi[k];
      cam[i * 7 + 6] = rig->cameras[i].delta_f;
    }
    const int64_t counts[2] = {static_cast<int64_t>(rig->frame_count()), state->step};
    out.write(reinterpret_cast<const char*>(counts), 16);
    write_f64(out, cam);
    write_f64(out, state->sigma.m);
    write_f64(out, state->sigma.v);
    write_f64(out, state->color.m);
    write_f64(out, state->color.v);
    write_f64(out, state->camera.m);
    write_f64(out, state->camera.v);
  }
  require(out.good(), "save_checkpoint: short write to " + path);
}

// Loads the field; when the checkpoint has training state and `rig`/`state`
// are given, restores residuals and optimizer moments into them.
inline GridField load_checkpoint(const std::string& path, CameraRig* rig = nullptr,
                                 TrainState* state = nullptr) {
  using namespace trainer_detail;
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_checkpoint: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const nlohmann::json header = nlohmann::json::parse(line);
  require(header.at("dtype") == "f32" && header.at("byte_order") == "little",
          "load_checkpoint: unsupported encoding in " + path);
  const auto& res = header.at("resolution");
  const auto& bmin = header.at("bbox").at("min");
  const auto& bmax = header.at("bbox").at("max");
  GridField field(
      Eigen::Vector3i(res.at(0).get<int>(), res.at(1).get<int>(), res.at(2).get<int>()),
      Vec3(bmin.at(0).get<double>(), bmin.at(1).get<double>(), bmin.at(2).get<double>()),
      Vec3(bmax.at(0).get<double>(), bmax.at(1).get<double>(), bmax.at(2).get<double>()),
      header.at("frame_count").get<int>());
  read_f32(in, field.sigma_params());
  read_f32(in, field.color_params());
  require(in.good(), "load_checkpoint: truncated parameter blobs in " + path);
  if (header.value("train_state", false) && rig && state) {
    int64_t counts[2];
    in.read(reinterpret_cast<char*>(counts), 16);
    require(counts[0] == static_cast<int64_t>(rig->frame_count()),
            "load_checkpoint: camera frame count mismatch");
    std::vector<double> cam(rig->frame_count() * 7);
    *state = TrainState(field, *rig);
    state->step = counts[1];
    state->sigma.step = state->color.step = state->camera.step = counts[1];
    read_f64(in, cam);
    read_f64(in, state->sigma.m);
    read_f64(in, state->sigma.v);
    read_f64(in, state->color.m);
    read_f64(in, state->color.v);
    read_f64(in, state->camera.m);
    read_f64(in, state->camera.v);
    require(in.good(), "load_checkpoint: truncated training state in " + path);
    for (size_t i = 0; i < rig->frame_count(); ++i) {
      for (int k = 0; k < 6; ++k) rig->residuals[i].xi[k] = cam[i * 7 + k];
      rig->cameras[i].delta_f = cam[i * 7 + 6];
    }
  }
  return field;
}

struct TrainResult {
  bool aborted = false;  // non-finite loss encountered
  std::string abort_reason;
  int iterations_run = 0;
  LossBundle last_losses;
  std::string metrics_csv;  // one row per logged iteration
};

// Batches are horizontal pixel runs: uniformly drawn (frame, row, start), one
// run of `run_length` consecutive pixels each, matching the consecutive-ray
// pairing of the depth smoothing loss.
inline std::vector<RaySpec> sample_batch(const Dataset& ds, const TrainConfig& cfg,
                                         const CounterRng& rng, uint64_t iter) {
  const int run = std::min(cfg.run_length, ds.width);
  const int runs = std::max(1, cfg.batch_size / run);
  std::vector<RaySpec> batch;
  batch.reserve(static_cast<size_t>(runs) * run);
  for (int r = 0; r < runs; ++r) {
    const uint64_t key = static_cast<uint64_t>(r) * 3;
    const int frame = static_cast<int>(
        rng.integer(rng_stream::kBatchSelect, iter, key, ds.frame_count()));
    const int row = static_cast<int>(rng.integer(rng_stream::kBatchSelect, iter, key + 1,
                                                 static_cast<uint64_t>(ds.height)));
    const int x0 = static_cast<int>(rng.integer(
        rng_stream::kBatchSelect, iter, key + 2, static_cast<uint64_t>(ds.width - run + 1)));
    for (int k = 0; k < run; ++k) {
      RaySpec s;
      s.frame = frame;
      s.px = Vec2(x0 + k + 0.5, row + 0.5);
      s.gt_color = ds.images[frame].at(x0 + k, row);
      s.gt_depth = ds.depths[frame].at(x0 + k, row);
      s.gt_in_render_space = ds.depths_in_render_space;
      batch.push_back(s);
    }
  }
  return batch;
}

// Joint Adam optimization of the field and (optionally) camera residuals.
// Deterministic for a fixed config: all randomness flows through counter
// streams keyed by (seed, iteration, run/ray index). On a non-finite loss the
// last finite-state checkpoint is kept in `field`/`rig` and training stops.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg, GridField& field,
                         CameraRig& rig, TrainState& state,
                         const std::string& checkpoint_path = "") {
  cfg.check();
  ds.check();
  rig.check();
  using namespace trainer_detail;
  const CounterRng rng(cfg.seed);
  const AdamConfig field_adam{cfg.lr_field, cfg.beta1, cfg.beta2, cfg.eps_adam};
  const AdamConfig cam_adam{cfg.lr_camera, cfg.beta1, cfg.beta2, cfg.eps_adam};
  GradientBuffer buf(field, rig);
  std::vector<double> cam_params(rig.frame_count() * 7);
  std::vector<double> cam_grads(rig.frame_count() * 7);

  TrainResult result;
  result.metrics_csv = "iter,total,rgb,depth,weight,density,grad\n";
  char row[256];

  const PipelineConfig pcfg = cfg.pipeline();
  for (int it = 0; it < cfg.iterations; ++it) {
    const uint64_t iter = static_cast<uint64_t>(state.step);
    const std::vector<RaySpec> batch = sample_batch(ds, cfg, rng, iter);
    RenderPipeline pipe(field, rig, pcfg, rng);
    BatchResult fwd;
    // Non-finite values surface as errors from the loss aggregation (or
    // deeper); the abort contract is to stop and keep the last good state.
    try {
      fwd = pipe.forward(batch, iter);
      require(std::isfinite(fwd.losses.total), "train: non-finite total loss");
      buf.zero();
      pipe.backward(batch, fwd, buf);
    } catch (const Error& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }

    adam_step(field.sigma_params(), buf.sigma, state.sigma, field_adam);
    adam_step(field.color_params(), buf.color, state.color, field_adam);
    if (cfg.learn_cameras) {
      for (size_t i = 0; i < rig.frame_count(); ++i) {
        for (int k = 0; k < 6; ++k) {
          cam_params[i * 7 + k] = rig.residuals[i].xi[k];
          cam_grads[i * 7 + k] = buf.xi[i][k];
        }
        cam_params[i * 7 + 6] = rig.cameras[i].delta_f;
        cam_grads[i * 7 + 6] = buf.delta_f[i];
      }
      adam_step(cam_params, cam_grads, state.camera, cam_adam);
      quantize_f32(cam_params);
      for (size_t i = 0; i < rig.frame_count(); ++i) {
        for (int k = 0; k < 6; ++k) rig.residuals[i].xi[k] = cam_params[i * 7 + k];
        rig.cameras[i].delta_f = cam_params[i * 7 + 6];
      }
    }
    state.sigma.step = state.color.step = state.camera.step = ++state.step;
    quantize_f32(field.sigma_params());
    quantize_f32(field.color_params());

    result.last_losses = fwd.losses;
    ++result.iterations_run;
    if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      std::snprintf(row, sizeof(row), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<long long>(state.step), fwd.losses.total,
                    fwd.losses.rgb, fwd.losses.depth, fwd.losses.weight,
                    fwd.losses.density, fwd.losses.grad);
      result.metrics_csv += row;
    }
  }
  if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, field, &rig, &state);
  return result;
}

}  // namespace ddr
