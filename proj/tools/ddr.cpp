#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ddr/config.hpp"
#include "ddr/gradcheck.hpp"
#include "ddr/metrics.hpp"
#include "ddr/scene.hpp"
#include "ddr/trainer.hpp"
#include "ddr/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kValidationError = 2;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  ddr::require(out.good(), "cannot write " + path.string());
}

// Every verb records its artifacts and parameters under <out>/manifest.json.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& parameters, const json& artifacts) {
  json m;
  m["command"] = command;
  m["parameters"] = parameters;
  m["artifacts"] = artifacts;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

ddr::TrainConfig load_config(const std::string& path) {
  if (path.empty()) return ddr::TrainConfig{};
  std::ifstream in(path);
  ddr::require(in.good(), "cannot open config " + path);
  json j;
  in >> j;
  return ddr::config_from_json(j);
}

struct Overrides {
  int iterations = -1;
  int batch_size = -1;
  int samples_per_ray = -1;
  double lr_field = -1.0;
  double lr_camera = -1.0;
  int64_t seed = -1;
  int learn_cameras = -1;  // tri-state: unset / off / on

  void apply(ddr::TrainConfig& cfg) const {
    if (iterations >= 0) cfg.iterations = iterations;
    if (batch_size >= 0) cfg.batch_size = batch_size;
    if (samples_per_ray >= 0) cfg.samples_per_ray = samples_per_ray;
    if (lr_field >= 0.0) cfg.lr_field = lr_field;
    if (lr_camera >= 0.0) cfg.lr_camera = lr_camera;
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (learn_cameras >= 0) cfg.learn_cameras = learn_cameras != 0;
  }
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--iterations", ov.iterations, "override config iterations");
  cmd->add_option("--batch-size", ov.batch_size, "override config batch_size");
  cmd->add_option("--samples-per-ray", ov.samples_per_ray,
                  "override config samples_per_ray");
  cmd->add_option("--lr-field", ov.lr_field, "override config lr_field");
  cmd->add_option("--lr-camera", ov.lr_camera, "override config lr_camera");
  cmd->add_option("--seed", ov.seed, "override config seed");
  cmd->add_option("--learn-cameras", ov.learn_cameras,
                  "override config learn_cameras (0 or 1)");
}

int cmd_gen_scene(const std::string& out_dir, int frames, int views, int width,
                  int height, double focal, double baseline) {
  const ddr::SceneSpec spec = ddr::two_spheres_spec(frames);
  const ddr::CameraRig rig =
      ddr::small_baseline_rig(frames, width, height, focal, views, baseline);
  const ddr::Dataset ds = ddr::generate(spec, rig);
  fs::create_directories(out_dir);
  ddr::save_dataset(ds, out_dir);
  json params{{"frames", frames},   {"views", views},       {"width", width},
              {"height", height},   {"focal", focal},       {"baseline", baseline},
              {"scene", "two-spheres"}};
  json artifacts = json::array();
  for (size_t i = 0; i < ds.frame_count(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%03zu", i);
    artifacts.push_back({{"path", std::string("frames/") + name + ".png"},
                         {"kind", "image"},
                         {"frame", i}});
    artifacts.push_back({{"path", std::string("depth/") + name + ".pfm"},
                         {"kind", "depth"},
                         {"frame", i}});
  }
  artifacts.push_back({{"path", "cameras.json"}, {"kind", "cameras"}});
  artifacts.push_back({{"path", "meta.json"}, {"kind", "metadata"}});
  write_manifest(out_dir, "gen-scene", params, artifacts);
  std::cout << "wrote " << ds.frame_count() << " frame(s) to " << out_dir << "\n";
  return kOk;
}

int cmd_fit(const std::string& config_path, const std::string& data_dir,
            const std::string& out_dir, const Overrides& ov) {
  ddr::TrainConfig cfg = load_config(config_path);
  ov.apply(cfg);
  cfg.check();
  ddr::Dataset ds = ddr::load_dataset(data_dir);
  fs::create_directories(out_dir);

  ddr::GridField field(cfg.grid_resolution, ddr::Vec3(-1, -1, -1), ddr::Vec3(1, 1, 1),
                       static_cast<int>(ds.frame_count()));
  ddr::CameraRig rig = ds.rig;
  ddr::TrainState state(field, rig);
  const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
  const ddr::TrainResult res = ddr::train(ds, cfg, field, rig, state, ckpt);

  write_text(fs::path(out_dir) / "metrics.csv", res.metrics_csv);
  write_text(fs::path(out_dir) / "config.resolved.json",
             ddr::config_to_json(cfg).dump(2) + "\n");

  json params = ddr::config_to_json(cfg);
  params["data"] = data_dir;
  params["aborted"] = res.aborted;
  params["iterations_run"] = res.iterations_run;
  if (res.aborted) params["abort_reason"] = res.abort_reason;
  write_manifest(out_dir, "fit", params,
                 json::array({{{"path", "checkpoint.bin"}, {"kind", "checkpoint"}},
                              {{"path", "metrics.csv"}, {"kind", "metrics"}},
                              {{"path", "config.resolved.json"}, {"kind", "config"}}}));
  if (res.aborted) {
    std::cerr << "fit aborted after " << res.iterations_run
              << " iteration(s): " << res.abort_reason << "\n";
    return kValidationError;
  }
  std::cout << "fit complete: " << res.iterations_run << " iteration(s), total loss "
            << res.last_losses.total << "\n";
  return kOk;
}

int cmd_render(const std::string& checkpoint, const std::string& data_dir,
               const std::string& config_path, int frame, const std::string& out_dir) {
  ddr::Dataset ds = ddr::load_dataset(data_dir);
  ddr::CameraRig rig = ds.rig;
  ddr::TrainState state;
  const ddr::GridField field = ddr::load_checkpoint(checkpoint, &rig, &state);
  ddr::require(frame >= 0 && frame < static_cast<int>(rig.frame_count()),
               "render: frame out of range");
  ddr::TrainConfig cfg = load_config(config_path);
  ddr::PipelineConfig pc = cfg.pipeline();
  pc.jitter = false;
  pc.lambdas = ddr::Lambdas{0, 0, 0, 0, 0};

  ddr::ImageRGB img;
  ddr::ImageGray depth;
  ddr::render_view(field, rig, pc, frame, img, depth);
  fs::create_directories(out_dir);
  ddr::write_png(img, (fs::path(out_dir) / "image.png").string());
  ddr::write_pfm(depth, (fs::path(out_dir) / "depth.pfm").string());

  json params{{"checkpoint", checkpoint}, {"data", data_dir},
              {"frame", frame},           {"n_samples", pc.n_samples},
              {"use_ndc", pc.use_ndc},    {"t_near", pc.t_near},
              {"t_far", pc.t_far}};
  write_manifest(out_dir, "render", params,
                 json::array({{{"path", "image.png"}, {"kind", "image"}},
                              {{"path", "depth.pfm"}, {"kind", "depth"}}}));
  std::cout << "rendered frame " << frame << " to " << out_dir << "\n";
  return kOk;
}

int cmd_weightmap(const std::string& checkpoint, const std::string& data_dir,
                  const std::string& config_path, int frame, int row,
                  const std::string& out_dir) {
  ddr::Dataset ds = ddr::load_dataset(data_dir);
  ddr::CameraRig rig = ds.rig;
  ddr::TrainState state;
  const ddr::GridField field = ddr::load_checkpoint(checkpoint, &rig, &state);
  ddr::require(frame >= 0 && frame < static_cast<int>(rig.frame_count()),
               "weightmap: frame out of range");
  ddr::TrainConfig cfg = load_config(config_path);
  const ddr::WeightMap map = ddr::weight_map(field, rig, cfg.pipeline(), frame, row);
  fs::create_directories(out_dir);
  ddr::export_pgm(map, (fs::path(out_dir) / "weightmap.pgm").string());

  json params{{"checkpoint", checkpoint},
              {"data", data_dir},
              {"frame", frame},
              {"row", row},
              {"n_samples", map.n_samples},
              {"normalization", "per-map max"},
              {"max_weight", map.max_weight}};
  write_manifest(out_dir, "weightmap", params,
                 json::array({{{"path", "weightmap.pgm"}, {"kind", "weightmap"}}}));
  std::cout << "wrote weight map (max weight " << map.max_weight << ") to " << out_dir
            << "\n";
  return kOk;
}

int cmd_gradcheck(int points, const std::string& out_dir) {
  std::ostringstream table;
  const ddr::GradCheckSummary summary = ddr::run_gradcheck(table, points);
  std::cout << table.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "gradcheck.txt", table.str());
    json params{{"points_per_op", points}, {"all_passed", summary.all_passed}};
    write_manifest(out_dir, "gradcheck", params,
                   json::array({{{"path", "gradcheck.txt"}, {"kind", "report"}}}));
  }
  return summary.all_passed ? kOk : kValidationError;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& config_path, const std::string& out_dir) {
  ddr::Dataset ds = ddr::load_dataset(data_dir);
  ddr::CameraRig rig = ds.rig;
  ddr::TrainState state;
  const ddr::GridField field = ddr::load_checkpoint(checkpoint, &rig, &state);
  ddr::TrainConfig cfg = load_config(config_path);
  ddr::PipelineConfig pc = cfg.pipeline();
  pc.jitter = false;
  pc.lambdas = ddr::Lambdas{0, 0, 0, 0, 0};

  json frames = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0, modality_sum = 0.0, mass_sum = 0.0;
  for (size_t fr = 0; fr < ds.frame_count(); ++fr) {
    ddr::ImageRGB img;
    ddr::ImageGray depth;
    ddr::render_view(field, rig, pc, static_cast<int>(fr), img, depth);
    const double p = ddr::psnr(img, ds.images[fr]);
    const double s = ddr::ssim(img, ds.images[fr]);

    // Unimodality probed on a coarse pixel lattice across the frame.
    std::vector<ddr::Vec2> pixels;
    const int step = std::max(1, std::min(ds.width, ds.height) / 8);
    for (int y = step / 2; y < ds.height; y += step)
      for (int x = step / 2; x < ds.width; x += step)
        pixels.emplace_back(x + 0.5, y + 0.5);
    const ddr::UnimodalityReport rep =
        ddr::unimodality(field, rig, pc, static_cast<int>(fr), pixels);

    psnr_sum += p;
    ssim_sum += s;
    modality_sum += rep.mean_modality;
    mass_sum += rep.mean_peak_mass;
    frames.push_back({{"frame", fr},
                      {"psnr", p},
                      {"ssim", s},
                      {"mean_modality", rep.mean_modality},
                      {"mean_peak_mass", rep.mean_peak_mass},
                      {"probe_rays", pixels.size()}});
  }
  const double n = static_cast<double>(ds.frame_count());
  json report{{"frames", frames},
              {"mean_psnr", psnr_sum / n},
              {"mean_ssim", ssim_sum / n},
              {"mean_modality", modality_sum / n},
              {"mean_peak_mass", mass_sum / n}};

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "eval.json", report.dump(2) + "\n");
  json params{{"checkpoint", checkpoint}, {"data", data_dir}};
  write_manifest(out_dir, "eval", params,
                 json::array({{{"path", "eval.json"}, {"kind", "report"}}}));
  std::cout << "mean PSNR " << psnr_sum / n << " dB, mean SSIM " << ssim_sum / n
            << ", mean modality " << modality_sum / n << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable volume renderer with distribution-based depth "
               "regularization"};
  app.require_subcommand(1);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "generate a synthetic dataset");
  std::string gen_out;
  int gen_frames = 3, gen_views = 3, gen_width = 96, gen_height = 72;
  double gen_focal = 60.0, gen_baseline = 0.04;
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--frames", gen_frames, "time steps in the scene");
  gen->add_option("--views", gen_views, "camera views per time step");
  gen->add_option("--width", gen_width, "image width");
  gen->add_option("--height", gen_height, "image height");
  gen->add_option("--focal", gen_focal, "focal length in pixels");
  gen->add_option("--baseline", gen_baseline, "camera baseline span");

  // fit
  auto* fit = app.add_subcommand("fit", "train a grid field on a dataset");
  std::string fit_config, fit_data, fit_out;
  Overrides fit_ov;
  fit->add_option("--config", fit_config, "JSON training config");
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--out", fit_out, "output directory")->required();
  add_override_flags(fit, fit_ov);

  // render
  auto* render = app.add_subcommand("render", "render a view from a checkpoint");
  std::string ren_ckpt, ren_data, ren_config, ren_out;
  int ren_frame = 0;
  render->add_option("--checkpoint", ren_ckpt, "checkpoint file")->required();
  render->add_option("--data", ren_data, "dataset directory (for cameras)")->required();
  render->add_option("--config", ren_config, "JSON config for render settings");
  render->add_option("--frame", ren_frame, "frame index");
  render->add_option("--out", ren_out, "output directory")->required();

  // weightmap
  auto* wm = app.add_subcommand("weightmap", "export per-ray rendering weights "
                                             "for one image row");
  std::string wm_ckpt, wm_data, wm_config, wm_out;
  int wm_frame = 0, wm_row = 0;
  wm->add_option("--checkpoint", wm_ckpt, "checkpoint file")->required();
  wm->add_option("--data", wm_data, "dataset directory (for cameras)")->required();
  wm->add_option("--config", wm_config, "JSON config for render settings");
  wm->add_option("--frame", wm_frame, "frame index");
  wm->add_option("--row", wm_row, "image row")->required();
  wm->add_option("--out", wm_out, "output directory")->required();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of all "
                                             "registered gradients");
  int gc_points = 20;
  std::string gc_out;
  gc->add_option("--points", gc_points, "random points per op");
  gc->add_option("--out", gc_out, "optional output directory for the report");

  // eval
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM and weight-shape statistics "
                                        "against a dataset");
  std::string ev_ckpt, ev_data, ev_config, ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--config", ev_config, "JSON config for render settings");
  ev->add_option("--out", ev_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (gen->parsed())
      return cmd_gen_scene(gen_out, gen_frames, gen_views, gen_width, gen_height,
                           gen_focal, gen_baseline);
    if (fit->parsed()) return cmd_fit(fit_config, fit_data, fit_out, fit_ov);
    if (render->parsed())
      return cmd_render(ren_ckpt, ren_data, ren_config, ren_frame, ren_out);
    if (wm->parsed())
      return cmd_weightmap(wm_ckpt, wm_data, wm_config, wm_frame, wm_row, wm_out);
    if (gc->parsed()) return cmd_gradcheck(gc_points, gc_out);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_config, ev_out);
  } catch (const ddr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return kUsageError;
}
