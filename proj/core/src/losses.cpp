#include "pseopt/losses.hpp"

#include "pseopt/parallel.hpp"
#include "pseopt/rng.hpp"
#include "pseopt/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pseopt {

ViewAxis view_axis_from_string(const std::string& token) {
  if (token == "+x" || token == "x") return ViewAxis::kPosX;
  if (token == "-x") return ViewAxis::kNegX;
  if (token == "+y" || token == "y") return ViewAxis::kPosY;
  if (token == "-y") return ViewAxis::kNegY;
  if (token == "+z" || token == "z") return ViewAxis::kPosZ;
  if (token == "-z") return ViewAxis::kNegZ;
  throw ConfigError("unknown view axis '" + token + "' (expected one of +x -x +y -y +z -z)");
}

std::string to_string(ViewAxis axis) {
  switch (axis) {
    case ViewAxis::kPosX: return "+x";
    case ViewAxis::kNegX: return "-x";
    case ViewAxis::kPosY: return "+y";
    case ViewAxis::kNegY: return "-y";
    case ViewAxis::kPosZ: return "+z";
    case ViewAxis::kNegZ: return "-z";
  }
  return "?";
}

// In-plane world axes for each view direction.
static void plane_axes(ViewAxis view, int& u, int& v) {
  switch (view) {
    case ViewAxis::kPosX:
    case ViewAxis::kNegX: u = 1; v = 2; return;
    case ViewAxis::kPosY:
    case ViewAxis::kNegY: u = 0; v = 2; return;
    case ViewAxis::kPosZ:
    case ViewAxis::kNegZ: u = 0; v = 1; return;
  }
  u = 0;
  v = 1;
}

Vec2 Camera::project(const Vec3& x) const {
  int u, v;
  plane_axes(view_dir, u, v);
  return Vec2(x[u], x[v]);
}

Vec3 Camera::unproject_gradient(const Vec2& g) const {
  int u, v;
  plane_axes(view_dir, u, v);
  Vec3 out = Vec3::Zero();
  out[u] = g.x();
  out[v] = g.y();
  return out;
}

Vec2 Camera::pixel_center(int row, int col) const {
  const Vec2 extent = window_max - window_min;
  return Vec2(window_min.x() + (col + 0.5) * extent.x() / image_width,
              window_min.y() + (row + 0.5) * extent.y() / image_height);
}

double Camera::pixel_area() const {
  const Vec2 extent = window_max - window_min;
  return (extent.x() / image_width) * (extent.y() / image_height);
}

void Camera::validate() const {
  if (image_width < 8 || image_height < 8)
    throw ConfigError("camera image size must be at least 8x8");
  if (!((window_max - window_min).minCoeff() > 0.0))
    throw ConfigError("camera window is degenerate");
}

// ---------------------------------------------------------------------------
// LossGradient

LossGradient LossGradient::zeros(std::size_t particle_count) {
  LossGradient g;
  g.d_position.assign(particle_count, Vec3::Zero());
  g.d_scale.assign(particle_count, Vec3::Zero());
  g.d_rotation.assign(particle_count, Vec4::Zero());
  return g;
}

void LossGradient::accumulate_scaled(const LossGradient& other, double factor) {
  for (std::size_t i = 0; i < d_position.size(); ++i) {
    d_position[i] += factor * other.d_position[i];
    d_scale[i] += factor * other.d_scale[i];
    d_rotation[i] += factor * other.d_rotation[i];
  }
}

double LossGradient::max_abs_position_gradient() const {
  double m = 0.0;
  for (const Vec3& g : d_position) m = std::max(m, g.cwiseAbs().maxCoeff());
  return m;
}

void LossGradient::validate(const ParticleSet& pset) const {
  if (d_position.size() != pset.size())
    throw ConfigError("loss gradient size mismatch");
  for (std::size_t i = 0; i < d_position.size(); ++i) {
    if (!d_position[i].allFinite() || !d_scale[i].allFinite() || !d_rotation[i].allFinite())
      throw BlowupError("non-finite loss gradient", static_cast<long>(i));
    if (!pset.is_dynamic(i) &&
        (d_position[i].squaredNorm() > 0.0 || d_scale[i].squaredNorm() > 0.0 ||
         d_rotation[i].squaredNorm() > 0.0))
      throw ConfigError("static particle " + std::to_string(i) + " carries a gradient");
  }
  if (!std::isfinite(loss_value)) throw BlowupError("non-finite loss value");
}

// ---------------------------------------------------------------------------
// Renderer

namespace {

// Footprints are truncated at kSupportRadii standard deviations and the
// kernel is shifted to reach zero exactly there:
//   f(d) = opacity * (exp(-d^2 / (2 s^2)) - exp(-kSupportRadii^2 / 2))
// The shift is ~1.5e-8, far below every tolerance in use, and the hard
// support keeps distant pixels from coupling through the normalized color
// (the ratio (c_p - c) / D is wild where only footprint tails meet).
constexpr double kSupportRadii = 6.0;
constexpr double kKernelShift = 1.522997974471263e-8;  // exp(-18)

// Flattened per-particle splat data; positions projected once.
struct SplatCache {
  std::vector<double> qx, qy;     // projected centers
  std::vector<double> inv_2s2;    // 1 / (2 s^2)
  std::vector<double> support2;   // (kSupportRadii * s)^2
  std::vector<double> s;          // mean scale
  std::vector<double> opacity;
  std::vector<Vec3> color;
  std::size_t count = 0;
};

SplatCache build_cache(const ParticleSet& pset, const Camera& camera) {
  SplatCache cache;
  cache.count = pset.size();
  cache.qx.resize(cache.count);
  cache.qy.resize(cache.count);
  cache.inv_2s2.resize(cache.count);
  cache.support2.resize(cache.count);
  cache.s.resize(cache.count);
  cache.opacity.resize(cache.count);
  cache.color.resize(cache.count);
  for (std::size_t p = 0; p < cache.count; ++p) {
    const SplatParticle& sp = pset.particles[p];
    const Vec2 q = camera.project(sp.position);
    cache.qx[p] = q.x();
    cache.qy[p] = q.y();
    const double s = sp.scale.mean();
    cache.s[p] = s;
    cache.inv_2s2[p] = 1.0 / (2.0 * s * s);
    cache.support2[p] = kSupportRadii * kSupportRadii * s * s;
    cache.opacity[p] = sp.opacity;
    cache.color[p] = sp.color;
  }
  return cache;
}

// Density and opacity-weighted color sums per pixel.
struct ForwardMaps {
  Image density;    // D
  Image color_num;  // sum opacity * f * c
};

ForwardMaps render_maps(const SplatCache& cache, const Camera& camera) {
  ForwardMaps maps;
  const int W = camera.image_width, H = camera.image_height;
  maps.density = Image::zeros(W, H, 1);
  maps.color_num = Image::zeros(W, H, 3);
  parallel_for(static_cast<std::int64_t>(H) * W, [&](std::int64_t pix) {
    const int r = static_cast<int>(pix / W);
    const int c = static_cast<int>(pix % W);
    const Vec2 u = camera.pixel_center(r, c);
    double d_sum = 0.0;
    Vec3 col_sum = Vec3::Zero();
    for (std::size_t p = 0; p < cache.count; ++p) {
      const double dx = u.x() - cache.qx[p];
      const double dy = u.y() - cache.qy[p];
      const double d2 = dx * dx + dy * dy;
      if (d2 >= cache.support2[p]) continue;
      const double f =
          cache.opacity[p] * (std::exp(-d2 * cache.inv_2s2[p]) - kKernelShift);
      d_sum += f;
      col_sum += f * cache.color[p];
    }
    maps.density.at(r, c) = d_sum;
    for (int ch = 0; ch < 3; ++ch) maps.color_num.at(r, c, ch) = col_sum[ch];
  });
  return maps;
}

RenderedImage finish_render(const ForwardMaps& maps, const Camera& camera) {
  RenderedImage out;
  const int W = camera.image_width, H = camera.image_height;
  out.color = Image::zeros(W, H, 3);
  out.alpha = Image::zeros(W, H, 1);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const double d = maps.density.at(r, c);
      out.alpha.at(r, c) = 1.0 - std::exp(-d);
      if (d > 0.0)
        for (int ch = 0; ch < 3; ++ch) out.color.at(r, c, ch) = maps.color_num.at(r, c, ch) / d;
    }
  return out;
}

}  // namespace

RenderedImage splat_render(const ParticleSet& pset, const Camera& camera) {
  camera.validate();
  const SplatCache cache = build_cache(pset, camera);
  return finish_render(render_maps(cache, camera), camera);
}

LossGradient image_loss(const ParticleSet& pset, const RenderedImage& target,
                        const Camera& camera, const ImageLossWeights& weights) {
  camera.validate();
  const int W = camera.image_width, H = camera.image_height;
  if (target.color.width != W || target.color.height != H || target.color.channels != 3 ||
      target.alpha.width != W || target.alpha.height != H || target.alpha.channels != 1)
    throw ConfigError("image_loss: target size does not match the camera");

  const SplatCache cache = build_cache(pset, camera);
  const ForwardMaps maps = render_maps(cache, camera);
  const RenderedImage rendered = finish_render(maps, camera);

  const double inv_color_count = 1.0 / (static_cast<double>(H) * W * 3);
  const double inv_pixel_count = 1.0 / (static_cast<double>(H) * W);

  double l1 = 0.0;
  for (std::size_t i = 0; i < rendered.color.data.size(); ++i)
    l1 += std::abs(rendered.color.data[i] - target.color.data[i]);
  l1 *= inv_color_count;

  Image d_ssim;  // d SSIM / d rendered
  const double ssim_value = ssim_with_gradient(rendered.color, target.color, d_ssim);

  double alpha_term = 0.0;
  for (std::size_t i = 0; i < rendered.alpha.data.size(); ++i)
    alpha_term += rendered.alpha.data[i] * (1.0 - target.alpha.data[i]);
  alpha_term *= inv_pixel_count;

  LossGradient grad = LossGradient::zeros(pset.size());
  grad.parts["image"] = (1.0 - weights.lambda1) * l1;
  grad.parts["ssim"] = weights.lambda1 * (1.0 - ssim_value);
  grad.parts["alpha"] = weights.lambda2 * alpha_term;
  grad.loss_value = grad.parts["image"] + grad.parts["ssim"] + grad.parts["alpha"];

  // Adjoints on the rendered maps.
  Image dL_dcolor = Image::zeros(W, H, 3);
  Image dL_dalpha = Image::zeros(W, H, 1);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double diff = rendered.color.at(r, c, ch) - target.color.at(r, c, ch);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        dL_dcolor.at(r, c, ch) = (1.0 - weights.lambda1) * sign * inv_color_count -
                                 weights.lambda1 * d_ssim.at(r, c, ch);
      }
      dL_dalpha.at(r, c) =
          weights.lambda2 * (1.0 - target.alpha.at(r, c)) * inv_pixel_count;
    }

  // Chain through the splatter, one particle at a time (gather, parallel),
  // visiting only the pixels inside the particle's support box.
  const Vec2 extent = camera.window_max - camera.window_min;
  const double px = extent.x() / W, py = extent.y() / H;
  parallel_for(static_cast<std::int64_t>(pset.size()), [&](std::int64_t pi) {
    const std::size_t p = static_cast<std::size_t>(pi);
    if (!pset.is_dynamic(p)) return;  // appearance and statics stay frozen
    const double radius = kSupportRadii * cache.s[p];
    const int c0 = std::max(0, static_cast<int>((cache.qx[p] - radius - camera.window_min.x()) / px));
    const int c1 = std::min(W - 1, static_cast<int>((cache.qx[p] + radius - camera.window_min.x()) / px));
    const int r0 = std::max(0, static_cast<int>((cache.qy[p] - radius - camera.window_min.y()) / py));
    const int r1 = std::min(H - 1, static_cast<int>((cache.qy[p] + radius - camera.window_min.y()) / py));
    double gx = 0.0, gy = 0.0, gs = 0.0;
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const Vec2 u = camera.pixel_center(r, c);
        const double dx = u.x() - cache.qx[p];
        const double dy = u.y() - cache.qy[p];
        const double d2 = dx * dx + dy * dy;
        if (d2 >= cache.support2[p]) continue;
        // The kernel shift is constant, so derivatives use the raw Gaussian.
        const double e = cache.opacity[p] * std::exp(-d2 * cache.inv_2s2[p]);
        const double density = maps.density.at(r, c);
        // d(alpha)/d(f_p) and d(color)/d(f_p).
        double coef = dL_dalpha.at(r, c) * std::exp(-density);
        if (density > 0.0) {
          for (int ch = 0; ch < 3; ++ch) {
            const double pixel_color = maps.color_num.at(r, c, ch) / density;
            coef += dL_dcolor.at(r, c, ch) * (cache.color[p][ch] - pixel_color) / density;
          }
        }
        const double s = cache.s[p];
        // d f / d q = e * (u - q) / s^2 ; d f / d s = e * d^2 / s^3.
        gx += coef * e * dx / (s * s);
        gy += coef * e * dy / (s * s);
        gs += coef * e * d2 / (s * s * s);
      }
    grad.d_position[p] = camera.unproject_gradient(Vec2(gx, gy));
    // s = mean(scale): each scale component sees a third of ds.
    grad.d_scale[p] = Vec3::Constant(gs / 3.0);
  });

  grad.validate(pset);
  return grad;
}

// ---------------------------------------------------------------------------
// Providers

ShapePriorProvider::ShapePriorProvider(ShapeSpec target) : target_(target) {}

LossGradient ShapePriorProvider::grad(const ParticleSet& pset, int /*step*/) {
  LossGradient g = LossGradient::zeros(pset.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    const Vec3& x = pset.particles[i].position;
    const double d = target_.signed_distance(x);
    g.d_position[i] = d * target_.normal(x);
    loss += 0.5 * d * d;
  }
  g.loss_value = loss;
  g.parts["sds"] = loss;
  return g;
}

NoisyShapePriorProvider::NoisyShapePriorProvider(ShapeSpec target, double sigma,
                                                 std::uint64_t seed)
    : pull_(target), sigma_(sigma), seed_(seed) {}

LossGradient NoisyShapePriorProvider::grad(const ParticleSet& pset, int step) {
  LossGradient g = pull_.grad(pset, step);
  // One independent stream per (step, particle); iteration order never
  // affects the draw.
  const std::uint64_t step_key = seed_ ^ (0x9e3779b97f4a7c15ULL * (step + 1));
  for (std::size_t i = 0; i < pset.size(); ++i) {
    if (!pset.is_dynamic(i)) continue;
    Pcg32 rng(step_key, i);
    for (int a = 0; a < 3; ++a) {
      // Box-Muller; u1 > 0 by construction of next_double + epsilon.
      const double u1 = rng.next_double() + 1e-300;
      const double u2 = rng.next_double();
      g.d_position[i][a] +=
          sigma_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
  }
  return g;
}

LossGradient total_loss(const ParticleSet& pset, const RenderedImage& target,
                        const Camera& camera, std::span<ScoreProvider* const> providers,
                        double lambda1, double lambda2, double lambda3, int step) {
  LossGradient out = image_loss(pset, target, camera, {lambda1, lambda2});
  double sds = 0.0;
  for (ScoreProvider* provider : providers) {
    LossGradient g = provider->grad(pset, step);
    g.validate(pset);
    out.accumulate_scaled(g, lambda3);
    sds += g.loss_value;
  }
  out.parts["sds"] = sds;
  out.loss_value += lambda3 * sds;
  out.validate(pset);
  return out;
}

}  // namespace pseopt
