#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ddr/adam.hpp"
#include "ddr/pipeline.hpp"

namespace ddr {

// Full training configuration. Defaults are the desk-scale setup: small
// enough to converge in minutes on one core while exercising every loss.
struct TrainConfig {
  int iterations = 20000;
  int batch_size = 1024;     // rays per iteration
  int samples_per_ray = 128;
  double lr_field = 5e-4;
  double lr_camera = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  uint64_t seed = 0;
  int log_every = 1;

  Eigen::Vector3i grid_resolution{64, 64, 64};
  bool learn_cameras = false;

  bool use_ndc = true;
  double ndc_near = 1.0;
  double t_near = 1.0;  // world-space sampling range before the warp
  double t_far = 16.0;
  bool jitter = true;
  int run_length = 32;

  Lambdas lambdas;
  GumbelConfig gumbel;
  DensityLossConfig density;

  void check() const {
    require(iterations >= 1, "TrainConfig: iterations must be >= 1");
    require(batch_size >= 2 && samples_per_ray >= 2, "TrainConfig: batch too small");
    // lr_camera 0 is allowed: it freezes the residuals without changing the
    // iteration sequence.
    // A zero rate freezes that group; at least one group must learn.
    require(lr_field >= 0.0 && lr_camera >= 0.0 && (lr_field > 0.0 || lr_camera > 0.0),
            "TrainConfig: bad learning rates");
    require(grid_resolution.minCoeff() >= 2, "TrainConfig: grid too small");
  }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.n_samples = samples_per_ray;
    p.use_ndc = use_ndc;
    p.ndc_near = ndc_near;
    p.t_near = t_near;
    p.t_far = t_far;
    p.jitter = jitter;
    p.lambdas = lambdas;
    p.gumbel = gumbel;
    p.density = density;
    p.learn_cameras = learn_cameras;
    p.run_length = run_length;
    return p;
  }
};

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.samples_per_ray = j.value("samples_per_ray", c.samples_per_ray);
  c.lr_field = j.value("lr_field", c.lr_field);
  c.lr_camera = j.value("lr_camera", c.lr_camera);
  c.seed = j.value("seed", c.seed);
  c.log_every = j.value("log_every", c.log_every);
  c.learn_cameras = j.value("learn_cameras", c.learn_cameras);
  c.use_ndc = j.value("use_ndc", c.use_ndc);
  c.ndc_near = j.value("ndc_near", c.ndc_near);
  c.t_near = j.value("t_near", c.t_near);
  c.t_far = j.value("t_far", c.t_far);
  c.jitter = j.value("jitter", c.jitter);
  c.run_length = j.value("run_length", c.run_length);
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    c.beta1 = a.value("beta1", c.beta1);
    c.beta2 = a.value("beta2", c.beta2);
    c.eps_adam = a.value("eps", c.eps_adam);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("resolution")) {
      const auto& r = g["resolution"];
      require(r.is_array() && r.size() == 3, "config: grid.resolution must be [3]");
      c.grid_resolution = Eigen::Vector3i(r[0].get<int>(), r[1].get<int>(),
                                          r[2].get<int>());
    }
  }
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    c.lambdas.rgb = l.value("lambda_rgb", c.lambdas.rgb);
    c.lambdas.depth = l.value("lambda_depth", c.lambdas.depth);
    c.lambdas.weight = l.value("lambda_weight", c.lambdas.weight);
    c.lambdas.density = l.value("lambda_density", c.lambdas.density);
    c.lambdas.grad = l.value("lambda_grad", c.lambdas.grad);
  }
  if (j.contains("ddr")) {
    const auto& d = j["ddr"];
    c.gumbel.epsilon = d.value("epsilon", c.gumbel.epsilon);
    c.gumbel.n_samples = d.value("n_samples", c.gumbel.n_samples);
    c.gumbel.weight_floor = d.value("weight_floor", c.gumbel.weight_floor);
    c.density.margin = d.value("density_margin", c.density.margin);
    c.gumbel.seed = d.value("seed", c.gumbel.seed);
  }
  c.check();
  return c;
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"samples_per_ray", c.samples_per_ray},
      {"lr_field", c.lr_field},
      {"lr_camera", c.lr_camera},
      {"seed", c.seed},
      {"log_every", c.log_every},
      {"learn_cameras", c.learn_cameras},
      {"use_ndc", c.use_ndc},
      {"ndc_near", c.ndc_near},
      {"t_near", c.t_near},
      {"t_far", c.t_far},
      {"jitter", c.jitter},
      {"run_length", c.run_length},
      {"adam", {{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps_adam}}},
      {"grid",
       {{"resolution",
         {c.grid_resolution.x(), c.grid_resolution.y(), c.grid_resolution.z()}}}},
      {"loss",
       {{"lambda_rgb", c.lambdas.rgb},
        {"lambda_depth", c.lambdas.depth},
        {"lambda_weight", c.lambdas.weight},
        {"lambda_density", c.lambdas.density},
        {"lambda_grad", c.lambdas.grad}}},
      {"ddr",
       {{"epsilon", c.gumbel.epsilon},
        {"n_samples", c.gumbel.n_samples},
        {"weight_floor", c.gumbel.weight_floor},
        {"density_margin", c.density.margin},
        {"seed", c.gumbel.seed}}}};
}

}  // namespace ddr
