#include "pseopt/cli.hpp"

#include "pseopt/image.hpp"
#include "pseopt/io.hpp"
#include "pseopt/log.hpp"
#include "pseopt/losses.hpp"
#include "pseopt/metrics.hpp"
#include "pseopt/optimizer.hpp"
#include "pseopt/parallel.hpp"
#include "pseopt/rng.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/sdf.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>

namespace pseopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  int threads = 1;
  std::string out_dir;

  bool seed_given() const { return seed_opt && seed_opt->count() > 0; }
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "run configuration file");
  if (config_required) c->required();
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. optimizer.steps_K=10");
  opts.seed_opt = cmd->add_option("--seed", opts.seed, "override output.seed");
  cmd->add_option("--threads", opts.threads, "worker cap; 1 = reference path")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", opts.out_dir, "override output.directory");
}

RunConfig finalize_config(RunConfig cfg, const CommonOpts& opts) {
  for (const auto& assignment : opts.overrides) apply_override(cfg, assignment);
  if (opts.seed_given()) cfg.output.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.output.directory = opts.out_dir;
  cfg.validate();
  set_max_threads(opts.threads);
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory", dir);
}

std::string checkpoint_path(const std::string& dir, int step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%06d.ply", step);
  return (fs::path(dir) / name).string();
}

/// Particle cloud + materials + mass model from the config inputs.
ParticleSet load_particles(const RunConfig& cfg) {
  if (cfg.input.particles_path.empty())
    throw ConfigError("input.particles is required for this command");
  ParticleSet pset = ply_read(cfg.input.particles_path);
  for (const auto& [id, mat] : cfg.materials)
    if (pset.material_of_object.count(id)) pset.material_of_object[id] = mat;
  assign_mass_from_scales(pset);
  pset.validate();
  return pset;
}

struct LoadedTarget {
  RenderedImage image;
  bool present = false;
};

LoadedTarget load_target(const RunConfig& cfg) {
  LoadedTarget t;
  if (cfg.losses.target_color_path.empty()) return t;
  Image color = load_png(cfg.losses.target_color_path);
  if (color.channels == 1) {  // promote grayscale targets
    Image rgb = Image::zeros(color.width, color.height, 3);
    for (int r = 0; r < color.height; ++r)
      for (int c = 0; c < color.width; ++c)
        for (int ch = 0; ch < 3; ++ch) rgb.at(r, c, ch) = color.at(r, c);
    color = std::move(rgb);
  }
  Image alpha;
  if (!cfg.losses.target_alpha_path.empty()) {
    alpha = load_png(cfg.losses.target_alpha_path);
    if (alpha.channels != 1) throw ConfigError("target alpha must be a grayscale PNG");
  } else {
    alpha = Image::zeros(color.width, color.height, 1);  // no mask: everything is leak
  }
  if (alpha.width != color.width || alpha.height != color.height)
    throw ConfigError("target color and alpha sizes differ");
  t.image.color = std::move(color);
  t.image.alpha = std::move(alpha);
  t.present = true;
  return t;
}

std::unique_ptr<ScoreProvider> make_provider(const RunConfig& cfg) {
  if (cfg.provider.kind == "shape_prior")
    return std::make_unique<ShapePriorProvider>(cfg.provider.shape);
  if (cfg.provider.kind == "noisy_shape_prior")
    return std::make_unique<NoisyShapePriorProvider>(cfg.provider.shape,
                                                     cfg.provider.noise_sigma,
                                                     cfg.output.seed);
  return nullptr;
}

void write_report(const MetricReport& report, const std::string& path) {
  json j;
  j["penetration_fraction"] = report.penetration_fraction;
  j["max_penetration_depth"] = report.max_penetration_depth;
  j["total_mass"] = report.total_mass;
  j["total_momentum"] = {report.total_momentum.x(), report.total_momentum.y(),
                         report.total_momentum.z()};
  j["psnr_db"] = report.psnr_db;
  j["ssim"] = report.ssim;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing", path);
  out << j.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed", path);
}

MetricReport final_report(const ParticleSet& pset, const SdfField* sdf,
                          const LoadedTarget& target, const Camera& camera) {
  MetricReport report;
  if (sdf) {
    const auto pen = penetration_fraction(pset, *sdf);
    report.penetration_fraction = pen.fraction;
    report.max_penetration_depth = pen.max_depth;
  }
  const auto cons = conservation_report(pset);
  report.total_mass = cons.mass;
  report.total_momentum = cons.momentum;
  if (target.present) {
    const RenderedImage rendered = splat_render(pset, camera);
    report.psnr_db = psnr(rendered.color, target.image.color);
    report.ssim = ssim_metric(rendered.color, target.image.color);
  }
  return report;
}

/// Shared body of `optimize` and `simulate`.
int run_optimization(const RunConfig& cfg) {
  ensure_dir(cfg.output.directory);
  save_config(cfg, (fs::path(cfg.output.directory) / "config_echo.cfg").string());

  ParticleSet pset = load_particles(cfg);
  std::optional<SdfField> sdf;
  if (!cfg.input.sdf_path.empty()) sdf = read_psdf(cfg.input.sdf_path);

  const LoadedTarget target = load_target(cfg);
  std::unique_ptr<ScoreProvider> provider = make_provider(cfg);
  LossContext loss;
  loss.target = target.present ? &target.image : nullptr;
  loss.camera = cfg.losses.camera;
  if (provider) loss.providers.push_back(provider.get());
  loss.lambda1 = cfg.losses.lambda1;
  loss.lambda2 = cfg.losses.lambda2;
  loss.lambda3 = cfg.losses.lambda3;

  const bool needs_loss = cfg.optimizer.mode != OptimMode::kPpps;
  if (needs_loss && !target.present && loss.providers.empty())
    throw ConfigError("mode " + to_string(cfg.optimizer.mode) +
                      " needs losses.target_color and/or a provider");

  OptimTelemetry telemetry;
  const std::string telemetry_path =
      (fs::path(cfg.output.directory) / "telemetry.csv").string();
  const int interval = cfg.output.checkpoint_interval;
  const int last_step = cfg.optimizer.steps - 1;
  CheckpointFn on_step = [&](int step, const ParticleSet& ps) {
    if ((interval > 0 && step % interval == 0) || step == last_step)
      ply_write(ps, checkpoint_path(cfg.output.directory, step));
  };

  try {
    optimize(pset, loss, cfg.optimizer, cfg.scene, sdf ? &*sdf : nullptr, telemetry, on_step);
  } catch (...) {
    telemetry_csv(telemetry, telemetry_path);  // partial telemetry survives aborts
    throw;
  }
  telemetry_csv(telemetry, telemetry_path);

  const MetricReport report =
      final_report(pset, sdf ? &*sdf : nullptr, target, cfg.losses.camera);
  write_report(report, (fs::path(cfg.output.directory) / "report.json").string());

  PSEOPT_INFO("run finished: %d steps in %.1f ms, final penetration %.4f",
              cfg.optimizer.steps, telemetry.total_wall_ms, report.penetration_fraction);
  std::printf("done: %d steps, penetration_fraction %.6f, artifacts in %s\n",
              cfg.optimizer.steps, report.penetration_fraction,
              cfg.output.directory.c_str());
  return kExitOk;
}

int cmd_metrics(const std::string& ply_path, const std::string& sdf_path,
                const CommonOpts& opts) {
  set_max_threads(opts.threads);
  ParticleSet pset = ply_read(ply_path);
  assign_mass_from_scales(pset);

  std::optional<SdfField> sdf;
  if (!sdf_path.empty()) sdf = read_psdf(sdf_path);

  LoadedTarget target;
  Camera camera;
  if (!opts.config_path.empty()) {
    RunConfig cfg = finalize_config(load_config(opts.config_path), opts);
    target = load_target(cfg);
    camera = cfg.losses.camera;
  }
  const MetricReport report = final_report(pset, sdf ? &*sdf : nullptr, target, camera);

  const std::string out_dir = opts.out_dir.empty() ? "." : opts.out_dir;
  ensure_dir(out_dir);
  write_report(report, (fs::path(out_dir) / "report.json").string());
  std::printf("penetration_fraction %.6f\nmax_penetration_depth %.6g\n"
              "total_mass %.6g\ntotal_momentum %.6g %.6g %.6g\n",
              report.penetration_fraction, report.max_penetration_depth, report.total_mass,
              report.total_momentum.x(), report.total_momentum.y(),
              report.total_momentum.z());
  if (target.present)
    std::printf("psnr_db %.4f\nssim %.6f\n", report.psnr_db, report.ssim);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct FdTally {
  long pass = 0;
  long total = 0;
  double rate() const { return total ? static_cast<double>(pass) / total : 1.0; }
};

bool fd_matches(double analytic, double fd) {
  const double scale = std::max(std::abs(analytic), std::abs(fd));
  return std::abs(analytic - fd) <= std::max(1e-8, 1e-3 * scale);
}

int cmd_gradcheck(const CommonOpts& opts) {
  RunConfig cfg = finalize_config(load_config(opts.config_path), opts);
  ParticleSet pset = load_particles(cfg);
  const LoadedTarget target = load_target(cfg);
  if (!target.present) throw ConfigError("gradcheck needs losses.target_color");
  const Camera& camera = cfg.losses.camera;
  const ImageLossWeights weights{cfg.losses.lambda1, cfg.losses.lambda2};

  const double window_extent = (camera.window_max - camera.window_min).mean();
  const double step = 1e-4 * window_extent;
  std::printf("gradcheck: finite-difference step %.3g (1e-4 of window extent)\n", step);

  std::vector<std::size_t> dynamic_ids;
  for (std::size_t i = 0; i < pset.size(); ++i)
    if (pset.is_dynamic(i)) dynamic_ids.push_back(i);
  if (dynamic_ids.empty()) throw ConfigError("gradcheck: no dynamic particles");

  Pcg32 rng(cfg.output.seed);
  FdTally image_tally;
  {
    const LossGradient analytic = image_loss(pset, target.image, camera, weights);
    const auto loss_at = [&](ParticleSet& ps) {
      return image_loss(ps, target.image, camera, weights).loss_value;
    };
    for (int n = 0; n < 48; ++n) {  // position coordinates
      const std::size_t p = dynamic_ids[rng.next_below(static_cast<std::uint32_t>(dynamic_ids.size()))];
      const int axis = static_cast<int>(rng.next_below(3));
      ParticleSet probe = pset;
      probe.particles[p].position[axis] += step;
      const double up = loss_at(probe);
      probe.particles[p].position[axis] -= 2.0 * step;
      const double down = loss_at(probe);
      const double fd = (up - down) / (2.0 * step);
      if (fd_matches(analytic.d_position[p][axis], fd)) ++image_tally.pass;
      ++image_tally.total;
    }
    for (int n = 0; n < 16; ++n) {  // scale coordinates
      const std::size_t p = dynamic_ids[rng.next_below(static_cast<std::uint32_t>(dynamic_ids.size()))];
      const int axis = static_cast<int>(rng.next_below(3));
      ParticleSet probe = pset;
      probe.particles[p].scale[axis] += step;
      const double up = loss_at(probe);
      probe.particles[p].scale[axis] -= 2.0 * step;
      const double down = loss_at(probe);
      const double fd = (up - down) / (2.0 * step);
      if (fd_matches(analytic.d_scale[p][axis], fd)) ++image_tally.pass;
      ++image_tally.total;
    }
  }
  std::printf("image_loss: %ld/%ld coordinates within tolerance (%.1f%%)\n",
              image_tally.pass, image_tally.total, 100.0 * image_tally.rate());

  FdTally prior_tally;
  {
    ShapeSpec shape = cfg.provider.kind != "none"
                          ? cfg.provider.shape
                          : ShapeSpec::sphere(0.5 * (cfg.scene.domain_min + cfg.scene.domain_max),
                                              0.2);
    ShapePriorProvider provider(shape);
    const LossGradient analytic = provider.grad(pset, 0);
    for (int n = 0; n < 64; ++n) {
      const std::size_t p = dynamic_ids[rng.next_below(static_cast<std::uint32_t>(dynamic_ids.size()))];
      const int axis = static_cast<int>(rng.next_below(3));
      ParticleSet probe = pset;
      probe.particles[p].position[axis] += step;
      const double up = provider.grad(probe, 0).loss_value;
      probe.particles[p].position[axis] -= 2.0 * step;
      const double down = provider.grad(probe, 0).loss_value;
      const double fd = (up - down) / (2.0 * step);
      if (fd_matches(analytic.d_position[p][axis], fd)) ++prior_tally.pass;
      ++prior_tally.total;
    }
  }
  std::printf("shape_prior: %ld/%ld coordinates within tolerance (%.1f%%)\n",
              prior_tally.pass, prior_tally.total, 100.0 * prior_tally.rate());

  const double rate =
      static_cast<double>(image_tally.pass + prior_tally.pass) /
      static_cast<double>(image_tally.total + prior_tally.total);
  std::printf("overall: %.1f%% pass (threshold 95%%) -> %s\n", 100.0 * rate,
              rate >= 0.95 ? "PASS" : "FAIL");
  return rate >= 0.95 ? kExitOk : 1;
}

// ---------------------------------------------------------------------------
// demo scene

/// The bundled self-validating scene: an elastic sphere lodged in the top
/// of a static box, viewed from the side, with a target render showing the
/// sphere resting on top. The image loss sees the in-plane misalignment,
/// the physics must dig the hidden cap out of the box.
RunConfig build_demo_config(const std::string& out_dir, std::uint64_t seed) {
  RunConfig cfg;
  cfg.scene.grid_resolution = 24;  // ~14 particles per cell with the counts below
  cfg.scene.domain_min = Vec3(0, 0, 0);
  cfg.scene.domain_max = Vec3(1, 1, 1);
  cfg.scene.gravity = Vec3(0, 0, -9.81);
  cfg.scene.boundary_margin_cells = 3;
  cfg.scene.sdf_boundary_mode = BoundaryMode::kSlip;

  MaterialParams soft;
  soft.youngs_modulus = 8.0;  // jelly-soft so gamma can stay inside the CFL guard
  soft.poisson_ratio = 0.3;
  soft.density = 1000.0;
  cfg.materials[1] = soft;  // background (static; density feeds nothing)
  cfg.materials[2] = soft;  // foreground sphere

  cfg.optimizer.steps = 100;
  cfg.optimizer.substeps = 16;
  cfg.optimizer.learning_rate = 2.5;
  cfg.optimizer.mode = OptimMode::kPse;

  cfg.losses.lambda1 = 0.2;
  cfg.losses.lambda2 = 1.0;
  cfg.losses.lambda3 = 0.02;  // scaled to the synthetic score units
  cfg.losses.camera.view_dir = ViewAxis::kNegY;
  cfg.losses.camera.image_width = 64;
  cfg.losses.camera.image_height = 64;
  cfg.losses.camera.window_min = Vec2(0.20, 0.08);
  cfg.losses.camera.window_max = Vec2(0.80, 0.76);
  cfg.losses.target_color_path = (fs::path(out_dir) / "target.png").string();
  cfg.losses.target_alpha_path = (fs::path(out_dir) / "target_alpha.png").string();

  cfg.provider.kind = "noisy_shape_prior";
  cfg.provider.noise_sigma = 0.5;
  // goal: sphere resting on the box top (set again in build_demo_assets)
  cfg.input.particles_path = (fs::path(out_dir) / "init.ply").string();
  cfg.input.sdf_path = (fs::path(out_dir) / "bg.psdf").string();
  cfg.output.directory = out_dir;
  cfg.output.checkpoint_interval = 0;
  cfg.output.seed = seed;
  return cfg;
}

void build_demo_assets(RunConfig& cfg) {
  const std::string& dir = cfg.output.directory;
  ensure_dir(dir);

  const ShapeSpec box = ShapeSpec::box(Vec3(0.5, 0.5, 0.30), Vec3(0.18, 0.18, 0.16));
  const double sphere_r = 0.12;
  const double box_top = box.center.z() + box.half_extent.z();
  const Vec3 goal_center(0.5, 0.5, box_top + sphere_r + 0.01);
  cfg.provider.shape = ShapeSpec::sphere(goal_center, sphere_r);

  TwoObjectSpec spec;
  spec.background = box;
  // One shared color: the image signal lives entirely in the alpha
  // structure, which is bounded and smooth; distinct colors would route
  // gradients through the normalized-color ratio, which spikes wherever
  // faint footprints of different colors mix.
  spec.background_color = Vec3(0.85, 0.45, 0.25);
  spec.foreground_color = spec.background_color;
  spec.opacity = 0.006;       // translucent: the loss sees the whole body,
                              // not just a saturated silhouette rim
  spec.scale_multiplier = 3.2;
  // Start laterally offset; make_two_object_scene sinks it to the overlap depth.
  spec.foreground = ShapeSpec::sphere(Vec3(0.47, 0.5, 0.60), sphere_r);
  spec.background_material = cfg.materials.at(1);
  spec.foreground_material = cfg.materials.at(2);
  constexpr double kOverlap = 0.85;
  constexpr int kParticlesPerObject = 1400;
  ParticleSet pset =
      make_two_object_scene(spec, cfg.scene, kParticlesPerObject, kOverlap, cfg.output.seed);
  ply_write(pset, cfg.input.particles_path);

  write_psdf(sdf_from_primitive(box, cfg.scene.domain_min, cfg.scene.domain_max,
                                cfg.scene.grid_resolution + 1),
             cfg.input.sdf_path);

  // The target renders the same particles with the foreground translated to
  // the goal, so a rigid motion can reach the optimum exactly.
  ParticleSet goal = pset;
  Vec3 mean_fg = Vec3::Zero();
  std::size_t n_fg = 0;
  for (const auto& p : goal.particles)
    if (p.object_id == 2) {
      mean_fg += p.position;
      ++n_fg;
    }
  const Vec3 shift = goal_center - mean_fg / static_cast<double>(n_fg);
  for (auto& p : goal.particles)
    if (p.object_id == 2) p.position += shift;
  const RenderedImage target = splat_render(goal, cfg.losses.camera);
  save_png(target.color, cfg.losses.target_color_path);

  // The alpha target is the foreground's segmentation mask at the goal
  // pose, not the soft composed render, and it is feathered: 1 inside the
  // goal silhouette, falling linearly to 0 over kFeather world units. The
  // graded apron gives the leak term a long-range slope toward the goal,
  // and inside the mask it goes quiet so aligned splats keep their scales.
  // The static box shows up only as a constant offset.
  ParticleSet goal_foreground = goal;
  std::erase_if(goal_foreground.particles,
                [](const SplatParticle& p) { return p.object_id != 2; });
  const RenderedImage fg_only = splat_render(goal_foreground, cfg.losses.camera);
  const Camera& cam = cfg.losses.camera;
  constexpr double kFeather = 0.25;
  std::vector<Vec2> mask_pixels;
  for (int r = 0; r < cam.image_height; ++r)
    for (int c = 0; c < cam.image_width; ++c)
      if (fg_only.alpha.at(r, c) > 0.15) mask_pixels.push_back(cam.pixel_center(r, c));
  Image feathered = Image::zeros(cam.image_width, cam.image_height, 1);
  for (int r = 0; r < cam.image_height; ++r)
    for (int c = 0; c < cam.image_width; ++c) {
      const Vec2 u = cam.pixel_center(r, c);
      double d2_min = std::numeric_limits<double>::max();
      for (const Vec2& m : mask_pixels) d2_min = std::min(d2_min, (u - m).squaredNorm());
      feathered.at(r, c) = std::clamp(1.0 - std::sqrt(d2_min) / kFeather, 0.0, 1.0);
    }
  save_png(feathered, cfg.losses.target_alpha_path);
}

int cmd_demo(const CommonOpts& opts) {
  const std::string out_dir = opts.out_dir.empty() ? "demo_out" : opts.out_dir;
  RunConfig cfg = build_demo_config(out_dir, opts.seed_given() ? opts.seed : 42);
  build_demo_assets(cfg);
  for (const auto& assignment : opts.overrides) apply_override(cfg, assignment);
  cfg.validate();
  set_max_threads(opts.threads);
  save_config(cfg, (fs::path(out_dir) / "demo.cfg").string());
  return run_optimization(cfg);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"physics-guided splat-particle optimizer"};
  app.require_subcommand(1);

  CommonOpts opt_opts, sim_opts, metrics_opts, grad_opts, demo_opts;
  std::string metrics_ply, metrics_sdf;

  CLI::App* optimize_cmd =
      app.add_subcommand("optimize", "run pse | gd | alternate | ppps optimization");
  add_common_flags(optimize_cmd, opt_opts, true);

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "physics-only settling run");
  add_common_flags(simulate_cmd, sim_opts, true);

  CLI::App* metrics_cmd = app.add_subcommand("metrics", "report on a particle cloud");
  metrics_cmd->add_option("--ply", metrics_ply, "particle cloud")->required();
  metrics_cmd->add_option("--sdf", metrics_sdf, "background SDF (PSDF)");
  add_common_flags(metrics_cmd, metrics_opts, false);

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient validation");
  add_common_flags(gradcheck_cmd, grad_opts, true);

  CLI::App* demo_cmd =
      app.add_subcommand("demo", "generate the bundled scene and run end-to-end");
  add_common_flags(demo_cmd, demo_opts, false);

  std::vector<const char*> argv;
  argv.push_back("pseopt");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (optimize_cmd->parsed())
      return run_optimization(finalize_config(load_config(opt_opts.config_path), opt_opts));
    if (simulate_cmd->parsed()) {
      RunConfig cfg = finalize_config(load_config(sim_opts.config_path), sim_opts);
      cfg.optimizer.mode = OptimMode::kPpps;
      return run_optimization(cfg);
    }
    if (metrics_cmd->parsed()) return cmd_metrics(metrics_ply, metrics_sdf, metrics_opts);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(grad_opts);
    if (demo_cmd->parsed()) return cmd_demo(demo_opts);
  } catch (const BlowupError& e) {
    std::fprintf(stderr, "error: simulation blew up: %s\n", e.what());
    return kExitBlowup;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace pseopt::cli
