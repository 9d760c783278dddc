#include "pseopt/optimizer.hpp"

#include "pseopt/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pseopt {

OptimMode optim_mode_from_string(const std::string& token) {
  if (token == "pse") return OptimMode::kPse;
  if (token == "gd") return OptimMode::kGd;
  if (token == "ppps") return OptimMode::kPpps;
  if (token == "alternate") return OptimMode::kAlternate;
  throw ConfigError("unknown optimizer mode '" + token +
                    "' (expected pse | gd | ppps | alternate)");
}

std::string to_string(OptimMode mode) {
  switch (mode) {
    case OptimMode::kPse: return "pse";
    case OptimMode::kGd: return "gd";
    case OptimMode::kPpps: return "ppps";
    case OptimMode::kAlternate: return "alternate";
  }
  return "?";
}

void OptimConfig::validate() const {
  if (steps < 1) throw ConfigError("optimizer steps must be >= 1");
  if (substeps < 1) throw ConfigError("optimizer substeps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

LossGradient LossContext::evaluate(const ParticleSet& pset, int step) const {
  if (target) {
    return total_loss(pset, *target, camera,
                      std::span<ScoreProvider* const>(providers.data(), providers.size()),
                      lambda1, lambda2, lambda3, step);
  }
  // No image target configured: geometry providers only.
  LossGradient out = LossGradient::zeros(pset.size());
  double sds = 0.0;
  for (ScoreProvider* provider : providers) {
    LossGradient g = provider->grad(pset, step);
    g.validate(pset);
    out.accumulate_scaled(g, lambda3);
    sds += g.loss_value;
  }
  out.parts["sds"] = sds;
  out.loss_value = lambda3 * sds;
  return out;
}

namespace {

constexpr double kScaleFloor = 1e-8;

// Shared theta_t descent: scales and rotations step by -gamma * grad.
// Exact-zero gradients skip the write so a zero-gradient step is a bitwise
// fixed point.
void update_transform_params(ParticleSet& pset, const LossGradient& grad, double gamma) {
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    SplatParticle& p = pset.particles[i];
    if (grad.d_scale[i].squaredNorm() > 0.0)
      p.scale = (p.scale - gamma * grad.d_scale[i]).cwiseMax(kScaleFloor);
    if (grad.d_rotation[i].squaredNorm() > 0.0) {
      Vec4 q = p.rotation - gamma * grad.d_rotation[i];
      const double n = q.norm();
      p.rotation = n > 0.0 ? Vec4(q / n) : Vec4(1, 0, 0, 0);
    }
  }
}

double mean_position_grad_norm(const ParticleSet& pset, const LossGradient& grad) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pset.size(); ++i)
    if (pset.is_dynamic(i)) {
      sum += grad.d_position[i].norm();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void record_loss(StepRecord& rec, const ParticleSet& pset, const LossGradient& grad) {
  rec.loss_total = grad.loss_value;
  rec.grad_norm_mean = mean_position_grad_norm(pset, grad);
  const auto part = [&grad](const char* key) {
    auto it = grad.parts.find(key);
    return it != grad.parts.end() ? it->second : 0.0;
  };
  rec.loss_image = part("image");
  rec.loss_ssim = part("ssim");
  rec.loss_alpha = part("alpha");
  rec.loss_sds = part("sds");
}

}  // namespace

long pse_step(ParticleSet& pset, const LossGradient& grad, const OptimConfig& cfg,
              MpmSolver& solver, const SdfField* sdf) {
  cfg.validate();
  grad.validate(pset);
  const double sign = cfg.velocity_sign == VelocitySign::kDescent ? -1.0 : 1.0;
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    SplatParticle& p = pset.particles[i];
    p.velocity = sign * grad.d_position[i];
    p.affine = Mat3::Zero();
    if (!cfg.carry_deformation) p.deform_grad = Mat3::Identity();
  }
  SubstepParams params;
  params.dt = cfg.substep_dt();
  params.gravity_on = cfg.gravity_during_opt;
  params.sdf = sdf;
  params.boundary_mode = solver.scene().sdf_boundary_mode;
  long clamps = 0;
  for (int n = 0; n < cfg.substeps; ++n) clamps += solver.substep(pset, params);

  update_transform_params(pset, grad, cfg.learning_rate);

  // Only positions survive a step; velocity is re-derived from the next
  // gradient.
  for (std::size_t i = 0; i < pset.size(); ++i)
    if (pset.is_dynamic(i)) pset.particles[i].velocity = Vec3::Zero();
  return clamps;
}

void gd_step(ParticleSet& pset, const LossGradient& grad, const OptimConfig& cfg) {
  cfg.validate();
  grad.validate(pset);
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    SplatParticle& p = pset.particles[i];
    if (grad.d_position[i].squaredNorm() > 0.0)
      p.position -= cfg.learning_rate * grad.d_position[i];
  }
  update_transform_params(pset, grad, cfg.learning_rate);
}

long ppps(ParticleSet& pset, const OptimConfig& cfg, MpmSolver& solver, const SdfField* sdf,
          int duration_substeps) {
  cfg.validate();
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    pset.particles[i].velocity = Vec3::Zero();
    pset.particles[i].affine = Mat3::Zero();
  }
  SubstepParams params;
  params.dt = cfg.substep_dt();
  params.gravity_on = cfg.gravity_during_ppps;
  params.sdf = sdf;
  params.boundary_mode = solver.scene().sdf_boundary_mode;
  long clamps = 0;
  for (int n = 0; n < duration_substeps; ++n) clamps += solver.substep(pset, params);
  return clamps;
}

void optimize(ParticleSet& pset, const LossContext& loss, const OptimConfig& cfg,
              const SceneConfig& scene, const SdfField* sdf, OptimTelemetry& telemetry,
              const CheckpointFn& on_step) {
  cfg.validate();
  scene.validate();
  pset.validate();

  const bool uses_physics = cfg.mode != OptimMode::kGd;
  if (uses_physics) {
    // Stiffness part of the CFL guard, checkable before any velocity exists.
    double wave = 0.0;
    for (const auto& [id, mobility] : pset.mobility_of_object)
      if (mobility == Mobility::kDynamic)
        wave = std::max(wave, pset.material_of_object.at(id).wave_speed());
    if (wave > 0.0 && cfg.substep_dt() > 0.5 * scene.spacing() / wave * (1.0 + 1e-12))
      throw ConfigError("substep dt " + std::to_string(cfg.substep_dt()) +
                        " exceeds the CFL limit " +
                        std::to_string(0.5 * scene.spacing() / wave) +
                        " for the stiffest dynamic material");
  }

  MpmSolver solver(scene);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < cfg.steps; ++k) {
    StepRecord rec;
    rec.step = k;
    long clamps = 0;

    switch (cfg.mode) {
      case OptimMode::kPse: {
        const LossGradient grad = loss.evaluate(pset, k);
        record_loss(rec, pset, grad);
        clamps = pse_step(pset, grad, cfg, solver, sdf);
        break;
      }
      case OptimMode::kGd: {
        const LossGradient grad = loss.evaluate(pset, k);
        record_loss(rec, pset, grad);
        gd_step(pset, grad, cfg);
        break;
      }
      case OptimMode::kAlternate: {
        if (k % 2 == 0) {
          const LossGradient grad = loss.evaluate(pset, k);
          record_loss(rec, pset, grad);
          gd_step(pset, grad, cfg);
        } else {
          clamps = ppps(pset, cfg, solver, sdf, cfg.substeps);
        }
        break;
      }
      case OptimMode::kPpps: {
        clamps = ppps(pset, cfg, solver, sdf, cfg.substeps);
        break;
      }
    }

    rec.clamp_count = clamps;
    if (sdf) rec.penetration_fraction = penetration_fraction(pset, *sdf).fraction;
    telemetry.steps.push_back(rec);
    if (on_step) on_step(k, pset);
  }
  telemetry.total_wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace pseopt
