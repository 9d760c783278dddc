#include "pseopt/scene.hpp"

#include "pseopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pseopt {

const MaterialParams& ParticleSet::material(const SplatParticle& p) const {
  auto it = material_of_object.find(p.object_id);
  if (it == material_of_object.end())
    throw ConfigError("no material for object_id " + std::to_string(p.object_id));
  return it->second;
}

std::size_t ParticleSet::dynamic_count() const {
  std::size_t n = 0;
  for (const auto& p : particles)
    if (is_dynamic(p)) ++n;
  return n;
}

void ParticleSet::validate() const {
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto& p = particles[i];
    if (!material_of_object.count(p.object_id) || !mobility_of_object.count(p.object_id))
      throw ConfigError("particle " + std::to_string(i) + ": object_id " +
                        std::to_string(p.object_id) + " missing from material/mobility maps");
    if (!(p.mass > 0.0)) throw ConfigError("particle " + std::to_string(i) + ": mass <= 0");
    if (!(p.volume0 > 0.0))
      throw ConfigError("particle " + std::to_string(i) + ": volume0 <= 0");
    if (!(p.opacity >= 0.0 && p.opacity <= 1.0))
      throw ConfigError("particle " + std::to_string(i) + ": opacity outside [0,1]");
    if (!(p.color.minCoeff() >= 0.0 && p.color.maxCoeff() <= 1.0))
      throw ConfigError("particle " + std::to_string(i) + ": color outside [0,1]");
    if (std::abs(p.rotation.norm() - 1.0) > 1e-9)
      throw ConfigError("particle " + std::to_string(i) + ": rotation not unit length");
    if (!(p.scale.minCoeff() > 0.0))
      throw ConfigError("particle " + std::to_string(i) + ": nonpositive scale");
    if (!p.position.allFinite() || !p.velocity.allFinite())
      throw ConfigError("particle " + std::to_string(i) + ": non-finite state");
  }
  for (const auto& [id, mat] : material_of_object) mat.validate();
}

void SceneConfig::validate() const {
  if (!((domain_max - domain_min).minCoeff() > 0.0))
    throw ConfigError("domain_max must exceed domain_min on every axis");
  const Vec3 extent = domain_max - domain_min;
  if (std::abs(extent.maxCoeff() - extent.minCoeff()) > 1e-12 * extent.maxCoeff())
    throw ConfigError("simulation domain must be a cube");
  if (grid_resolution < 8) throw ConfigError("grid_resolution must be >= 8");
  if (boundary_margin_cells < 2) throw ConfigError("boundary_margin_cells must be >= 2");
}

// ---------------------------------------------------------------------------
// ShapeSpec

ShapeSpec ShapeSpec::sphere(const Vec3& center, double radius) {
  ShapeSpec s;
  s.kind = ShapeKind::kSphere;
  s.center = center;
  s.radius = radius;
  return s;
}

ShapeSpec ShapeSpec::box(const Vec3& center, const Vec3& half_extent) {
  ShapeSpec s;
  s.kind = ShapeKind::kBox;
  s.center = center;
  s.half_extent = half_extent;
  return s;
}

ShapeSpec ShapeSpec::rounded_box(const Vec3& center, const Vec3& half_extent, double rounding) {
  ShapeSpec s;
  s.kind = ShapeKind::kRoundedBox;
  s.center = center;
  s.half_extent = half_extent;
  s.rounding = rounding;
  return s;
}

ShapeSpec ShapeSpec::capsule(const Vec3& a, const Vec3& b, double radius) {
  ShapeSpec s;
  s.kind = ShapeKind::kCapsule;
  s.cap_a = a;
  s.cap_b = b;
  s.center = 0.5 * (a + b);
  s.radius = radius;
  return s;
}

ShapeSpec ShapeSpec::shell(const Vec3& center, double outer_radius, double inner_radius) {
  ShapeSpec s;
  s.kind = ShapeKind::kShell;
  s.center = center;
  s.radius = outer_radius;
  s.inner_radius = inner_radius;
  return s;
}

static double box_distance(const Vec3& rel, const Vec3& half_extent) {
  const Vec3 q = rel.cwiseAbs() - half_extent;
  const Vec3 outside = q.cwiseMax(0.0);
  return outside.norm() + std::min(q.maxCoeff(), 0.0);
}

static Vec3 box_normal(const Vec3& rel, const Vec3& half_extent) {
  const Vec3 q = rel.cwiseAbs() - half_extent;
  if (q.maxCoeff() > 0.0) {
    Vec3 g = Vec3::Zero();
    for (int a = 0; a < 3; ++a)
      if (q[a] > 0.0) g[a] = (rel[a] >= 0.0 ? 1.0 : -1.0) * q[a];
    const double n = g.norm();
    return n > 0.0 ? Vec3(g / n) : Vec3(0, 0, 1);
  }
  // Inside: the nearest face wins.
  int axis = 0;
  q.maxCoeff(&axis);
  Vec3 g = Vec3::Zero();
  g[axis] = rel[axis] >= 0.0 ? 1.0 : -1.0;
  return g;
}

double ShapeSpec::signed_distance(const Vec3& x) const {
  switch (kind) {
    case ShapeKind::kSphere:
      return (x - center).norm() - radius;
    case ShapeKind::kBox:
      return box_distance(x - center, half_extent);
    case ShapeKind::kRoundedBox:
      return box_distance(x - center, half_extent - Vec3::Constant(rounding)) - rounding;
    case ShapeKind::kCapsule: {
      const Vec3 ab = cap_b - cap_a;
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((x - cap_a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      return (x - (cap_a + t * ab)).norm() - radius;
    }
    case ShapeKind::kShell: {
      const double r = (x - center).norm();
      return std::max(r - radius, inner_radius - r);
    }
  }
  throw ConfigError("unknown shape kind");
}

Vec3 ShapeSpec::normal(const Vec3& x) const {
  switch (kind) {
    case ShapeKind::kSphere: {
      const Vec3 d = x - center;
      const double n = d.norm();
      return n > 1e-14 ? Vec3(d / n) : Vec3(0, 0, 1);
    }
    case ShapeKind::kBox:
      return box_normal(x - center, half_extent);
    case ShapeKind::kRoundedBox:
      return box_normal(x - center, half_extent - Vec3::Constant(rounding));
    case ShapeKind::kCapsule: {
      const Vec3 ab = cap_b - cap_a;
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((x - cap_a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const Vec3 d = x - (cap_a + t * ab);
      const double n = d.norm();
      return n > 1e-14 ? Vec3(d / n) : Vec3(0, 0, 1);
    }
    case ShapeKind::kShell: {
      const Vec3 d = x - center;
      const double r = d.norm();
      if (r < 1e-14) return Vec3(0, 0, 1);
      // Outward of the outer sphere or inward wall of the cavity.
      return (r - radius >= inner_radius - r) ? Vec3(d / r) : Vec3(-d / r);
    }
  }
  throw ConfigError("unknown shape kind");
}

double ShapeSpec::volume() const {
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case ShapeKind::kSphere:
      return 4.0 / 3.0 * pi * radius * radius * radius;
    case ShapeKind::kBox:
      return 8.0 * half_extent.prod();
    case ShapeKind::kRoundedBox: {
      const Vec3 core = 2.0 * (half_extent - Vec3::Constant(rounding));
      const double A = core.x(), B = core.y(), C = core.z(), r = rounding;
      return A * B * C + 2.0 * r * (A * B + A * C + B * C) + pi * r * r * (A + B + C) +
             4.0 / 3.0 * pi * r * r * r;
    }
    case ShapeKind::kCapsule:
      return pi * radius * radius * (cap_b - cap_a).norm() +
             4.0 / 3.0 * pi * radius * radius * radius;
    case ShapeKind::kShell:
      return 4.0 / 3.0 * pi *
             (radius * radius * radius - inner_radius * inner_radius * inner_radius);
  }
  throw ConfigError("unknown shape kind");
}

double ShapeSpec::inradius() const {
  switch (kind) {
    case ShapeKind::kSphere:
      return radius;
    case ShapeKind::kBox:
      return half_extent.minCoeff();
    case ShapeKind::kRoundedBox:
      return half_extent.minCoeff();
    case ShapeKind::kCapsule:
      return radius;
    case ShapeKind::kShell:
      return 0.5 * (radius - inner_radius);
  }
  throw ConfigError("unknown shape kind");
}

void ShapeSpec::aabb(Vec3& lo, Vec3& hi) const {
  switch (kind) {
    case ShapeKind::kSphere:
    case ShapeKind::kShell:
      lo = center - Vec3::Constant(radius);
      hi = center + Vec3::Constant(radius);
      return;
    case ShapeKind::kBox:
    case ShapeKind::kRoundedBox:
      lo = center - half_extent;
      hi = center + half_extent;
      return;
    case ShapeKind::kCapsule:
      lo = cap_a.cwiseMin(cap_b) - Vec3::Constant(radius);
      hi = cap_a.cwiseMax(cap_b) + Vec3::Constant(radius);
      return;
  }
  throw ConfigError("unknown shape kind");
}

// ---------------------------------------------------------------------------
// Scene construction

static ShapeSpec translated(const ShapeSpec& s, const Vec3& dv) {
  ShapeSpec out = s;
  out.center += dv;
  out.cap_a += dv;
  out.cap_b += dv;
  return out;
}

static void sample_shape(const ShapeSpec& shape, int count, const MaterialParams& mat,
                         const Vec3& color, double opacity, double scale_multiplier,
                         int object_id, Pcg32& rng, std::vector<SplatParticle>& out) {
  Vec3 lo, hi;
  shape.aabb(lo, hi);
  const double volume0 = shape.volume() / count;
  const double splat_scale = scale_multiplier * 0.5 * std::cbrt(volume0);
  for (int i = 0; i < count; ++i) {
    Vec3 x;
    do {
      x = rng.uniform_in_box(lo, hi);
    } while (!shape.contains(x));
    SplatParticle p;
    p.position = x;
    p.mass = mat.density * volume0;
    p.volume0 = volume0;
    p.scale = Vec3::Constant(splat_scale);
    p.color = color;
    p.opacity = opacity;
    p.object_id = object_id;
    out.push_back(p);
  }
}

ParticleSet make_two_object_scene(const TwoObjectSpec& spec, const SceneConfig& scene,
                                  int particles_per_object, double overlap,
                                  std::uint64_t seed) {
  scene.validate();
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap must be in [0, 1]");
  if (particles_per_object < 1) throw ConfigError("particles_per_object must be >= 1");

  // Shift the foreground along the background's outward normal until its
  // center sits (1 - overlap) * inradius away from the surface; overlap 1
  // sinks a full inradius in, overlap 0 leaves the shapes tangent.
  const double d0 = spec.background.signed_distance(spec.foreground.center);
  const Vec3 n = spec.background.normal(spec.foreground.center);
  const double target_distance = (1.0 - overlap) * spec.foreground.inradius();
  const ShapeSpec foreground = translated(spec.foreground, (target_distance - d0) * n);

  const double guard = 2.0 * scene.spacing();
  for (const ShapeSpec* s : {&spec.background, &foreground}) {
    Vec3 lo, hi;
    s->aabb(lo, hi);
    if ((lo - scene.domain_min).minCoeff() < guard ||
        (scene.domain_max - hi).minCoeff() < guard)
      throw ConfigError("shape does not fit inside the simulation domain");
  }

  ParticleSet pset;
  Pcg32 rng(seed);
  sample_shape(spec.background, particles_per_object, spec.background_material,
               spec.background_color, spec.opacity, spec.scale_multiplier, 1, rng,
               pset.particles);
  sample_shape(foreground, particles_per_object, spec.foreground_material,
               spec.foreground_color, spec.opacity, spec.scale_multiplier, 2, rng,
               pset.particles);
  pset.material_of_object = {{1, spec.background_material}, {2, spec.foreground_material}};
  pset.mobility_of_object = {{1, Mobility::kStatic}, {2, Mobility::kDynamic}};
  pset.validate();
  return pset;
}

void assign_mass_from_scales(ParticleSet& pset) {
  for (auto& p : pset.particles) {
    const double side = 2.0 * p.scale.mean();
    p.volume0 = side * side * side;
    p.mass = pset.material(p).density * p.volume0;
  }
}

bool SimilarityTransform::is_identity(double tol) const {
  return std::abs(scale - 1.0) <= tol && translation.cwiseAbs().maxCoeff() <= tol;
}

SimilarityTransform normalize_to_domain(ParticleSet& pset, const SceneConfig& scene,
                                        double margin) {
  if (pset.particles.empty()) throw ConfigError("normalize_to_domain: empty particle set");
  if (!(margin > 0.0 && margin < 0.5))
    throw ConfigError("normalize_to_domain: margin must be in (0, 0.5)");

  Vec3 bb_lo = pset.particles.front().position;
  Vec3 bb_hi = bb_lo;
  for (const auto& p : pset.particles) {
    bb_lo = bb_lo.cwiseMin(p.position);
    bb_hi = bb_hi.cwiseMax(p.position);
  }
  const Vec3 domain_extent = scene.domain_max - scene.domain_min;
  const Vec3 target_lo = scene.domain_min + margin * domain_extent;
  const Vec3 avail = (1.0 - 2.0 * margin) * domain_extent;

  Vec3 extent = bb_hi - bb_lo;
  const double max_extent = extent.maxCoeff();
  double scale = 1.0;
  if (max_extent > 0.0) {
    // A flat axis is measured with the largest extent so it cannot force
    // an infinite scale.
    for (int a = 0; a < 3; ++a)
      if (extent[a] <= 0.0) extent[a] = max_extent;
    scale = (avail.array() / extent.array()).minCoeff();
  }

  SimilarityTransform xf{scale, target_lo - scale * bb_lo};
  for (auto& p : pset.particles) {
    p.position = xf.apply(p.position);
    p.scale *= scale;
  }
  return xf;
}

}  // namespace pseopt
