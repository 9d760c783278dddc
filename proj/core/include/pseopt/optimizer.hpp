#pragma once

#include "pseopt/losses.hpp"
#include "pseopt/mpm.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/sdf.hpp"
#include "pseopt/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pseopt {

enum class OptimMode { kPse, kGd, kPpps, kAlternate };
/// Sign applied to the position gradient when it is injected as the
/// initial velocity: descent injects -grad (the default; the first substep
/// then advances positions exactly like a gradient-descent step of size dt),
/// raw_gradient injects +grad unchanged.
enum class VelocitySign { kDescent, kRawGradient };

OptimMode optim_mode_from_string(const std::string& token);
std::string to_string(OptimMode mode);

struct OptimConfig {
  int steps = 500;               // K
  int substeps = 16;             // N per step
  double learning_rate = 0.01;   // gamma; substep dt = gamma / N
  OptimMode mode = OptimMode::kPse;
  bool gravity_during_opt = false;
  bool gravity_during_ppps = true;
  VelocitySign velocity_sign = VelocitySign::kDescent;
  bool carry_deformation = true;  // keep F across steps (reset each step when off)

  double substep_dt() const { return learning_rate / substeps; }
  void validate() const;
};

struct StepRecord {
  int step = 0;
  double loss_total = 0.0;
  double loss_image = 0.0;
  double loss_ssim = 0.0;
  double loss_alpha = 0.0;
  double loss_sds = 0.0;
  double grad_norm_mean = 0.0;  // mean |d_position| over dynamic particles
  double penetration_fraction = 0.0;
  long clamp_count = 0;
  double wall_ms = 0.0;  // reserved; kept at 0 so artifacts stay reproducible
};

struct OptimTelemetry {
  std::vector<StepRecord> steps;
  double total_wall_ms = 0.0;  // measured, in-memory only (never serialized)
};

/// Everything a loss evaluation needs, bundled for the outer loop.
struct LossContext {
  const RenderedImage* target = nullptr;
  Camera camera;
  std::vector<ScoreProvider*> providers;
  double lambda1 = 0.2;
  double lambda2 = 1.0;
  double lambda3 = 1e-5;

  LossGradient evaluate(const ParticleSet& pset, int step) const;
};

/// One physics-guided update. The position gradient becomes the initial
/// velocity of the dynamic particles (sign per cfg.velocity_sign), the
/// affine matrices reset, and N substeps of dt = gamma / N advance the
/// positions; final velocities are discarded. Scales and rotations take a
/// plain descent step of size gamma. Returns the total band-clamp count.
long pse_step(ParticleSet& pset, const LossGradient& grad, const OptimConfig& cfg,
              MpmSolver& solver, const SdfField* sdf);

/// Plain gradient descent on positions, scales and rotations. No physics.
void gd_step(ParticleSet& pset, const LossGradient& grad, const OptimConfig& cfg);

/// Physics as post-process: zeroes velocities and affine state, then runs
/// `duration_substeps` substeps (gravity per cfg.gravity_during_ppps).
/// Returns the clamp count.
long ppps(ParticleSet& pset, const OptimConfig& cfg, MpmSolver& solver, const SdfField* sdf,
          int duration_substeps);

using CheckpointFn = std::function<void(int step, const ParticleSet& pset)>;

/// Runs cfg.steps optimization steps, dispatching on cfg.mode:
///   pse       loss -> pse_step each step
///   gd        loss -> gd_step each step
///   alternate gd_step on even steps, a ppps burst of N substeps on odd
///   ppps      physics only, in K blocks of N substeps, no loss evaluations
/// Telemetry is appended per completed step, so aborted runs leave a valid
/// partial record in `telemetry`. Opacity and color are never touched.
void optimize(ParticleSet& pset, const LossContext& loss, const OptimConfig& cfg,
              const SceneConfig& scene, const SdfField* sdf, OptimTelemetry& telemetry,
              const CheckpointFn& on_step = {});

}  // namespace pseopt
