#pragma once

#include "pseopt/image.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/sdf.hpp"
#include "pseopt/types.hpp"

namespace pseopt {

struct MetricReport {
  double penetration_fraction = 0.0;
  double max_penetration_depth = 0.0;  // m
  double total_mass = 0.0;
  Vec3 total_momentum = Vec3::Zero();
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct PenetrationResult {
  double fraction = 0.0;
  double max_depth = 0.0;
};

/// Fraction of dynamic particles sampled strictly inside the SDF beyond a
/// half-spacing tolerance (resting contact at grid resolution does not
/// count), plus the deepest penetration.
PenetrationResult penetration_fraction(const ParticleSet& pset, const SdfField& sdf);

/// 10 log10(1 / MSE) for [0,1] images; identical images cap at 99 dB so
/// downstream CSV never sees infinities.
double psnr(const Image& a, const Image& b);

/// Metric-form SSIM (11x11 Gaussian window, sigma 1.5, k1 .01, k2 .03,
/// dynamic range 1).
double ssim_metric(const Image& a, const Image& b);

/// Total mass and momentum summed over the dynamic particles.
struct ConservationReport {
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
};
ConservationReport conservation_report(const ParticleSet& pset);

}  // namespace pseopt
