#pragma once

#include "pseopt/scene.hpp"
#include "pseopt/sdf.hpp"
#include "pseopt/types.hpp"

#include <array>
#include <vector>

namespace pseopt {

/// Background Eulerian grid for one substep. Nodes live on the cell
/// corners: node (i,j,k) at origin + (i,j,k) * spacing, i in [0, cells].
/// `momentum_or_velocity` holds momentum after the particle-to-grid
/// scatter and velocity after the grid update.
struct GridState {
  Vec3i node_count = Vec3i::Zero();
  double spacing = 0.0;
  Vec3 origin = Vec3::Zero();
  std::vector<double> mass;
  std::vector<Vec3> momentum_or_velocity;

  static GridState make(const SceneConfig& scene);
  void clear();

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * node_count.y() + j) * node_count.z() + k;
  }
  Vec3 node_position(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
  std::size_t node_total() const {
    return static_cast<std::size_t>(node_count.x()) * node_count.y() * node_count.z();
  }

  double total_mass() const;
  Vec3 total_momentum() const;  // valid right after p2g
};

struct SubstepParams {
  double dt = 1e-4;
  bool gravity_on = false;
  const SdfField* sdf = nullptr;  // optional static-object boundary
  BoundaryMode boundary_mode = BoundaryMode::kSlip;
};

/// Quadratic B-spline stencil of a particle: 3 weights per axis over the
/// 3x3x3 node block starting at `base`. Per-axis kernel
///   N(u) = 0.75 - u^2          for |u| < 0.5
///        = 0.5 (1.5 - |u|)^2   for 0.5 <= |u| < 1.5
/// with u measured in cell units from the node.
struct BsplineStencil {
  Vec3i base;
  std::array<double, 3> wx, wy, wz;
  Vec3 cell_coord;  // (x - origin) / h

  double weight(int i, int j, int k) const { return wx[i] * wy[j] * wz[k]; }

  struct Entry {
    Vec3i node;     // absolute node index
    double weight;
    Vec3 dpos;      // x_node - x_particle, world units
  };
  /// The 27 (node, weight, offset) triples in lexicographic order.
  std::array<Entry, 27> entries(const GridState& grid) const;
};

/// Throws OutOfDomainError when the 3x3x3 block does not fit (particle
/// closer than ~1.5 cells to the domain boundary).
BsplineStencil bspline_stencil(const Vec3& position, const GridState& grid);

/// Scatters mass and momentum of the dynamic particles to the grid. The
/// stress force is fused into the scatter MLS-style: each particle adds
/// w * G * (x_i - x_p) with G = -(4 dt / h^2) * volume0 * kirchhoff_stress(F).
/// Static particles contribute nothing; their geometry acts through the SDF.
/// The grid must be cleared beforehand. Throws BlowupError on NaN state or
/// det(F) <= 0, OutOfDomainError if a particle left the stencil band.
void p2g(const ParticleSet& pset, GridState& grid, const SubstepParams& params);

/// Momentum -> velocity on nodes with mass above mass_epsilon (1e-12 of the
/// mean particle mass), then gravity, then the domain-box band (normal
/// component zeroed within boundary_margin_cells of each face), then SDF
/// projection at penetrating nodes. Zero-mass nodes get zero velocity.
void grid_update(GridState& grid, const SubstepParams& params, const SceneConfig& scene,
                 double mean_particle_mass);

/// Gathers node velocities back to the dynamic particles:
///   v  = sum w v_i
///   C  = (4 / h^2) sum w v_i (x_i - x_p)^T
///   x += dt v
///   F  = (I + dt C) F
/// Particles advected outside the stencil band are clamped back in;
/// the return value counts those clamps.
long g2p(ParticleSet& pset, const GridState& grid, const SubstepParams& params);

/// Largest stable dt for the current particle speeds and material stiffness:
/// 0.5 h / max(max |v_p|, max wave speed).
double cfl_limit(const ParticleSet& pset, const SceneConfig& scene);

/// One MLS transfer cycle: clear -> p2g -> grid_update -> g2p, owning a
/// reusable grid. Deterministic: identical inputs give bit-identical
/// outputs on the reference path.
class MpmSolver {
 public:
  explicit MpmSolver(const SceneConfig& scene);

  /// Runs one substep; returns the number of band clamps. Throws
  /// ConfigError when params.dt exceeds the CFL limit, BlowupError when the
  /// state degenerates (NaN, det(F) <= 0).
  long substep(ParticleSet& pset, const SubstepParams& params);

  const SceneConfig& scene() const { return scene_; }
  const GridState& grid() const { return grid_; }

 private:
  SceneConfig scene_;
  GridState grid_;
};

}  // namespace pseopt
