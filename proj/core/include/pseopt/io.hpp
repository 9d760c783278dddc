#pragma once

#include "pseopt/losses.hpp"
#include "pseopt/optimizer.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/types.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace pseopt {

/// Shortest decimal form that parses back to the same value (to_chars).
/// All text formats route through these so serialization is canonical.
std::string format_double(double v);
std::string format_float(float v);

struct ProviderConfig {
  std::string kind = "none";  // none | shape_prior | noisy_shape_prior
  ShapeSpec shape;
  double noise_sigma = 0.5;  // noisy_shape_prior only
};

struct LossesConfig {
  double lambda1 = 0.2;
  double lambda2 = 1.0;
  double lambda3 = 1e-5;
  Camera camera;
  std::string target_color_path;
  std::string target_alpha_path;
};

struct InputConfig {
  std::string particles_path;  // PLY
  std::string sdf_path;        // PSDF
};

struct OutputConfig {
  std::string directory = "out";
  int checkpoint_interval = 0;  // PLY every N steps; 0 disables
  std::uint64_t seed = 0;
};

struct RunConfig {
  SceneConfig scene;
  std::map<int, MaterialParams> materials;  // per object_id
  OptimConfig optimizer;
  LossesConfig losses;
  ProviderConfig provider;
  InputConfig input;
  OutputConfig output;

  void validate() const;  // ranges only; path existence is checked on load
};

/// Flat `section.key = value` text config. '#' starts a comment. Unknown
/// keys are an error; missing keys keep their defaults. Referenced input
/// paths must resolve at load time.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& base_dir = "");
/// Applies one `section.key=value` override (the CLI --set flag).
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Canonical echo of every key, suitable for load_config.
std::string config_to_text(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

/// ASCII PLY with properties x y z (float), red green blue (uchar),
/// opacity scale_x scale_y scale_z (float), object_id (int). Writing is
/// canonical: write -> read -> write is byte-identical.
void ply_write(const ParticleSet& pset, const std::string& path);

/// Reads the PLY back. Simulation-only state is not persisted: F = I,
/// C = 0, v = 0, mass = volume0 = 1. Missing optional properties default
/// (opacity 1, object_id 2, color white, scale 0.01). Object 1 loads as
/// static, everything else dynamic, with default materials.
ParticleSet ply_read(const std::string& path);

/// CSV header: step,loss_total,loss_image,loss_ssim,loss_alpha,loss_sds,
/// grad_norm_mean,penetration_fraction,clamp_count,wall_ms. One row per
/// step, '.' decimal point regardless of locale.
void telemetry_csv(const OptimTelemetry& telemetry, const std::string& path);
OptimTelemetry telemetry_from_csv(const std::string& path);

}  // namespace pseopt
