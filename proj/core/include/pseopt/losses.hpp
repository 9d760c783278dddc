#pragma once

#include "pseopt/image.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/types.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pseopt {

enum class ViewAxis { kPosX, kNegX, kPosY, kNegY, kPosZ, kNegZ };

ViewAxis view_axis_from_string(const std::string& token);  // "+x".."-z"
std::string to_string(ViewAxis axis);

/// Axis-aligned orthographic camera. The image plane spans the two world
/// axes orthogonal to the view axis (x-view -> (y,z), y-view -> (x,z),
/// z-view -> (x,y)); image column tracks the first in-plane axis, image row
/// the second, row 0 at window_min.
struct Camera {
  ViewAxis view_dir = ViewAxis::kNegY;
  int image_width = 64;
  int image_height = 64;
  Vec2 window_min = Vec2(0.0, 0.0);
  Vec2 window_max = Vec2(1.0, 1.0);

  Vec2 project(const Vec3& x) const;
  Vec3 unproject_gradient(const Vec2& g) const;  // lift an in-plane gradient to 3D
  Vec2 pixel_center(int row, int col) const;
  double pixel_area() const;
  void validate() const;
};

struct RenderedImage {
  Image color;  // H x W x 3
  Image alpha;  // H x W x 1
};

/// Per-particle gradients of one loss term. Entries for static particles
/// are identically zero. d_rotation is carried for interface completeness;
/// the isotropic renderer cannot see rotations, so only providers fill it.
struct LossGradient {
  std::vector<Vec3> d_position;
  std::vector<Vec3> d_scale;
  std::vector<Vec4> d_rotation;
  double loss_value = 0.0;
  std::map<std::string, double> parts;  // keys: image, ssim, alpha, sds

  static LossGradient zeros(std::size_t particle_count);
  void accumulate_scaled(const LossGradient& other, double factor);
  double max_abs_position_gradient() const;
  /// Throws BlowupError on non-finite entries, ConfigError when a static
  /// particle carries a nonzero gradient.
  void validate(const ParticleSet& pset) const;
};

/// Additive-density orthographic splatter. Every particle (static and
/// dynamic alike) deposits an isotropic Gaussian footprint
/// exp(-d^2 / (2 s^2)) with s = mean(scale), weighted by opacity, truncated
/// to zero at 6 s (the kernel is shifted by exp(-18) ~ 1.5e-8 so the cut is
/// continuous):
///   D(u)     = sum_p f_p(u)
///   alpha(u) = 1 - exp(-D(u))
///   color(u) = sum_p f_p(u) c_p / D(u)   (0 where D = 0)
/// No depth sorting, so the image is smooth in particle positions and the
/// loss gradients below are exact.
RenderedImage splat_render(const ParticleSet& pset, const Camera& camera);

struct ImageLossWeights {
  double lambda1 = 0.2;  // SSIM share
  double lambda2 = 1.0;  // alpha leak penalty
};

/// L = (1 - lambda1) L1(I, I_gt) + lambda1 (1 - SSIM(I, I_gt))
///   + lambda2 mean(A (1 - A_gt)),
/// with analytic gradients through splat_render for the positions and
/// scales of dynamic particles. parts: image / ssim / alpha.
LossGradient image_loss(const ParticleSet& pset, const RenderedImage& target,
                        const Camera& camera, const ImageLossWeights& weights);

/// Pluggable geometry-score source. Implementations must return finite
/// gradients and zeros for static particles.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual std::string name() const = 0;
  virtual LossGradient grad(const ParticleSet& pset, int step) = 0;
};

/// Synthetic score source: pulls every dynamic particle onto the surface of
/// a target primitive. Per-particle loss 0.5 d^2 where d is the analytic
/// signed distance, so d_position = d * normal.
class ShapePriorProvider final : public ScoreProvider {
 public:
  explicit ShapePriorProvider(ShapeSpec target);
  std::string name() const override { return "shape_prior"; }
  LossGradient grad(const ParticleSet& pset, int step) override;
  const ShapeSpec& target() const { return target_; }

 private:
  ShapeSpec target_;
};

/// Stochastic score source: the shape-prior pull plus zero-mean Gaussian
/// noise of standard deviation `sigma` per coordinate, resampled every
/// (step, particle) from a seeded stream. This mimics the high-variance
/// gradients a sampled score model emits: a plain descent step scatters
/// under it, while the momentum-averaging transfer of the simulator
/// recovers the coherent pull. Deterministic for a fixed seed.
class NoisyShapePriorProvider final : public ScoreProvider {
 public:
  NoisyShapePriorProvider(ShapeSpec target, double sigma, std::uint64_t seed);
  std::string name() const override { return "noisy_shape_prior"; }
  LossGradient grad(const ParticleSet& pset, int step) override;

 private:
  ShapePriorProvider pull_;
  double sigma_;
  std::uint64_t seed_;
};

/// Total objective: image_loss + lambda3 * sum of provider losses.
/// parts["sds"] stores the unscaled provider sum, so
/// loss_value = parts[image] + parts[ssim] + parts[alpha] + lambda3 * parts[sds].
LossGradient total_loss(const ParticleSet& pset, const RenderedImage& target,
                        const Camera& camera, std::span<ScoreProvider* const> providers,
                        double lambda1, double lambda2, double lambda3, int step = 0);

}  // namespace pseopt
