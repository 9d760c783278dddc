#pragma once

#include "pseopt/materials.hpp"
#include "pseopt/types.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace pseopt {

enum class Mobility { kDynamic, kStatic };
enum class BoundaryMode { kSticky, kSlip };

/// One Gaussian-splat particle. Position/velocity/F/C/mass drive the
/// simulation; scale/rotation are the transform parameters; opacity/color
/// are appearance and stay frozen through every optimizer mode.
struct SplatParticle {
  Vec3 position = Vec3::Zero();         // m
  Vec3 velocity = Vec3::Zero();         // m/s
  double mass = 1.0;                    // kg
  double volume0 = 1.0;                 // rest volume, m^3
  Mat3 deform_grad = Mat3::Identity();  // F
  Mat3 affine = Mat3::Zero();           // C, 1/s
  Vec3 scale = Vec3::Constant(0.01);    // splat extent, m
  Vec4 rotation = Vec4(1, 0, 0, 0);     // unit quaternion (w, x, y, z)
  double opacity = 1.0;                 // frozen
  Vec3 color = Vec3::Ones();            // frozen, [0,1]^3
  int object_id = 2;                    // 1 = background, 2 = foreground
};

struct ParticleSet {
  std::vector<SplatParticle> particles;
  std::map<int, MaterialParams> material_of_object;
  std::map<int, Mobility> mobility_of_object;

  std::size_t size() const { return particles.size(); }

  bool is_dynamic(const SplatParticle& p) const {
    auto it = mobility_of_object.find(p.object_id);
    return it != mobility_of_object.end() && it->second == Mobility::kDynamic;
  }
  bool is_dynamic(std::size_t index) const { return is_dynamic(particles[index]); }

  const MaterialParams& material(const SplatParticle& p) const;
  std::size_t dynamic_count() const;

  /// Checks the structural invariants (maps cover every object_id, unit
  /// quaternions, positive mass/volume, attributes in range). Throws
  /// ConfigError on the first violation.
  void validate() const;
};

struct SceneConfig {
  int grid_resolution = 64;  // cells per axis; node count is resolution + 1
  Vec3 domain_min = Vec3::Zero();
  Vec3 domain_max = Vec3::Ones();
  Vec3 gravity = Vec3(0, 0, -9.81);
  int boundary_margin_cells = 3;
  BoundaryMode sdf_boundary_mode = BoundaryMode::kSlip;

  double spacing() const {
    return (domain_max.x() - domain_min.x()) / static_cast<double>(grid_resolution);
  }
  void validate() const;
};

enum class ShapeKind { kSphere, kBox, kRoundedBox, kCapsule, kShell };

/// Analytic solid primitive: exact signed distance, outward normal, volume.
/// Shapes double as particle-sampling regions and as SDF sources.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kSphere;
  Vec3 center = Vec3::Zero();
  double radius = 0.1;                     // sphere/capsule/shell outer
  Vec3 half_extent = Vec3::Constant(0.1);  // box, rounded box
  double rounding = 0.02;                  // rounded box corner radius
  Vec3 cap_a = Vec3::Zero(), cap_b = Vec3::Zero();  // capsule axis endpoints
  double inner_radius = 0.0;               // shell

  static ShapeSpec sphere(const Vec3& center, double radius);
  static ShapeSpec box(const Vec3& center, const Vec3& half_extent);
  static ShapeSpec rounded_box(const Vec3& center, const Vec3& half_extent, double rounding);
  static ShapeSpec capsule(const Vec3& a, const Vec3& b, double radius);
  static ShapeSpec shell(const Vec3& center, double outer_radius, double inner_radius);

  double signed_distance(const Vec3& x) const;
  /// Outward unit normal (normalized distance gradient). Falls back to +z
  /// at gradient singularities (e.g. the exact center of a sphere).
  Vec3 normal(const Vec3& x) const;
  double volume() const;
  /// Radius of the largest inscribed ball, used to express overlap depths.
  double inradius() const;
  void aabb(Vec3& lo, Vec3& hi) const;
  bool contains(const Vec3& x) const { return signed_distance(x) < 0.0; }
};

struct TwoObjectSpec {
  ShapeSpec background;  // object 1, static
  ShapeSpec foreground;  // object 2, dynamic
  MaterialParams background_material;
  MaterialParams foreground_material;
  Vec3 background_color = Vec3(0.45, 0.52, 0.60);
  Vec3 foreground_color = Vec3(0.90, 0.35, 0.20);
  double opacity = 1.0;  // shared by both clouds; <1 keeps splats translucent
  // Splat scale = multiplier * 0.5 * cbrt(volume share). Values above 1
  // overlap neighboring footprints for smoother renders; the mass model
  // derives from the scales either way.
  double scale_multiplier = 1.0;
};

/// Samples two uniform-density particle clouds: a static background (object
/// 1) and a dynamic foreground (object 2). The foreground center is shifted
/// along the background's outward normal so the foreground penetrates the
/// background by `overlap` times its inradius (overlap 0 leaves the shapes
/// tangent). Per-particle mass is density * shape volume / count.
/// Throws ConfigError when a shape (after the shift) leaves the domain.
ParticleSet make_two_object_scene(const TwoObjectSpec& spec, const SceneConfig& scene,
                                  int particles_per_object, double overlap,
                                  std::uint64_t seed);

/// Uniform scale + translation, x -> scale * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * x + translation; }
  Vec3 apply_inverse(const Vec3& x) const { return (x - translation) / scale; }
  SimilarityTransform inverse() const { return {1.0 / scale, -translation / scale}; }
  bool is_identity(double tol = 1e-12) const;
};

/// Rebuilds mass and rest volume from the splat scales and the per-object
/// material density: volume0 = (2 mean(scale))^3, mass = density * volume0.
/// Used after loading a PLY, which does not persist simulation state.
void assign_mass_from_scales(ParticleSet& pset);

/// Maps the bounding box of all particle positions into the domain shrunk
/// by `margin` times its extent on every side, with a single uniform scale
/// (the tightest axis governs) and the box min corner pinned to the shrunk
/// domain's min corner. Splat scales shrink by the same factor. Returns the
/// applied transform so exports can invert it. A zero-extent axis is
/// measured with the largest axis extent instead.
SimilarityTransform normalize_to_domain(ParticleSet& pset, const SceneConfig& scene,
                                        double margin);

}  // namespace pseopt
