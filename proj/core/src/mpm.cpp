#include "pseopt/mpm.hpp"

#include "pseopt/materials.hpp"
#include "pseopt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace pseopt {

GridState GridState::make(const SceneConfig& scene) {
  scene.validate();
  GridState g;
  g.node_count = Vec3i::Constant(scene.grid_resolution + 1);
  g.spacing = scene.spacing();
  g.origin = scene.domain_min;
  g.mass.assign(g.node_total(), 0.0);
  g.momentum_or_velocity.assign(g.node_total(), Vec3::Zero());
  return g;
}

void GridState::clear() {
  std::fill(mass.begin(), mass.end(), 0.0);
  std::fill(momentum_or_velocity.begin(), momentum_or_velocity.end(), Vec3::Zero());
}

double GridState::total_mass() const {
  double m = 0.0;
  for (double v : mass) m += v;
  return m;
}

Vec3 GridState::total_momentum() const {
  Vec3 p = Vec3::Zero();
  for (const Vec3& v : momentum_or_velocity) p += v;
  return p;
}

BsplineStencil bspline_stencil(const Vec3& position, const GridState& grid) {
  BsplineStencil s;
  s.cell_coord = (position - grid.origin) / grid.spacing;
  for (int a = 0; a < 3; ++a) {
    s.base[a] = static_cast<int>(std::floor(s.cell_coord[a] - 0.5));
    if (s.base[a] < 0 || s.base[a] + 2 > grid.node_count[a] - 1)
      throw OutOfDomainError(position);
  }
  // fx in [0.5, 1.5): offset of the particle from the base node, cell units.
  const Vec3 fx = s.cell_coord - s.base.cast<double>();
  const auto axis = [](double f, std::array<double, 3>& w) {
    w[0] = 0.5 * (1.5 - f) * (1.5 - f);
    w[1] = 0.75 - (f - 1.0) * (f - 1.0);
    w[2] = 0.5 * (f - 0.5) * (f - 0.5);
  };
  axis(fx.x(), s.wx);
  axis(fx.y(), s.wy);
  axis(fx.z(), s.wz);
  return s;
}

std::array<BsplineStencil::Entry, 27> BsplineStencil::entries(const GridState& grid) const {
  std::array<Entry, 27> out;
  int n = 0;
  const Vec3 xp = grid.origin + grid.spacing * cell_coord;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        Entry& e = out[n++];
        e.node = base + Vec3i(i, j, k);
        e.weight = wx[i] * wy[j] * wz[k];
        e.dpos = grid.node_position(e.node.x(), e.node.y(), e.node.z()) - xp;
      }
  return out;
}

void p2g(const ParticleSet& pset, GridState& grid, const SubstepParams& params) {
  const double h = grid.spacing;
  const double stress_factor = -4.0 * params.dt / (h * h);
  // Serial index-order scatter: the reference path is bit-deterministic.
  for (std::size_t pi = 0; pi < pset.particles.size(); ++pi) {
    const SplatParticle& p = pset.particles[pi];
    if (!pset.is_dynamic(p)) continue;
    if (!p.position.allFinite() || !p.velocity.allFinite() || !p.deform_grad.allFinite() ||
        !p.affine.allFinite())
      throw BlowupError("non-finite particle state in p2g", static_cast<long>(pi));
    if (!(p.deform_grad.determinant() > 0.0))
      throw BlowupError("det(F) <= 0 in p2g", static_cast<long>(pi));

    Mat3 affine_momentum = p.mass * p.affine;
    // MLS fusion of the stress force into the scatter.
    affine_momentum += stress_factor * p.volume0 * kirchhoff_stress(p.deform_grad, pset.material(p));

    BsplineStencil st;
    try {
      st = bspline_stencil(p.position, grid);
    } catch (const OutOfDomainError& e) {
      throw OutOfDomainError(e.position(), static_cast<long>(pi));
    }
    const Vec3 mv = p.mass * p.velocity;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = st.wx[i] * st.wy[j] * st.wz[k];
          const Vec3i node = st.base + Vec3i(i, j, k);
          const Vec3 dpos =
              grid.node_position(node.x(), node.y(), node.z()) - p.position;
          const std::size_t idx = grid.index(node.x(), node.y(), node.z());
          grid.mass[idx] += w * p.mass;
          grid.momentum_or_velocity[idx] += w * (mv + affine_momentum * dpos);
        }
  }
}

void grid_update(GridState& grid, const SubstepParams& params, const SceneConfig& scene,
                 double mean_particle_mass) {
  const double mass_eps = 1e-12 * mean_particle_mass;
  const int margin = scene.boundary_margin_cells;
  const Vec3i n = grid.node_count;
  const Vec3 g = scene.gravity;
  parallel_for(grid.node_total(), [&](std::int64_t linear) {
    double m = grid.mass[linear];
    Vec3& v = grid.momentum_or_velocity[linear];
    if (!(m > mass_eps)) {
      v = Vec3::Zero();
      return;
    }
    v /= m;
    if (params.gravity_on) v += params.dt * g;
    // Domain walls: kill the normal component inside the margin band.
    const int k = static_cast<int>(linear % n.z());
    const int j = static_cast<int>((linear / n.z()) % n.y());
    const int i = static_cast<int>(linear / (static_cast<std::int64_t>(n.y()) * n.z()));
    const Vec3i idx(i, j, k);
    for (int a = 0; a < 3; ++a)
      if (idx[a] < margin || idx[a] > n[a] - 1 - margin) v[a] = 0.0;
    if (params.sdf) {
      const auto s = params.sdf->sample(grid.node_position(i, j, k));
      v = project_velocity(v, s.distance, s.normal, params.boundary_mode);
    }
  });
}

long g2p(ParticleSet& pset, const GridState& grid, const SubstepParams& params) {
  const double h = grid.spacing;
  const double inv_h2 = 1.0 / (h * h);
  const Vec3 band_lo = grid.origin + Vec3::Constant(1.5 * h);
  const Vec3 band_hi = grid.origin +
                       Vec3::Constant(h * (grid.node_count.x() - 1) - 1.5 * h);
  std::atomic<long> clamps{0};
  parallel_for(static_cast<std::int64_t>(pset.particles.size()), [&](std::int64_t pi) {
    SplatParticle& p = pset.particles[static_cast<std::size_t>(pi)];
    if (!pset.is_dynamic(p)) return;
    const BsplineStencil st = bspline_stencil(p.position, grid);
    Vec3 v = Vec3::Zero();
    Mat3 b = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = st.wx[i] * st.wy[j] * st.wz[k];
          const Vec3i node = st.base + Vec3i(i, j, k);
          const Vec3 vi = grid.momentum_or_velocity[grid.index(node.x(), node.y(), node.z())];
          const Vec3 dpos = grid.node_position(node.x(), node.y(), node.z()) - p.position;
          v += w * vi;
          b += w * vi * dpos.transpose();
        }
    p.velocity = v;
    p.affine = 4.0 * inv_h2 * b;
    Vec3 x = p.position + params.dt * v;
    bool clamped = false;
    for (int a = 0; a < 3; ++a) {
      if (x[a] < band_lo[a]) {
        x[a] = band_lo[a];
        clamped = true;
      } else if (x[a] > band_hi[a]) {
        x[a] = band_hi[a];
        clamped = true;
      }
    }
    if (clamped) clamps.fetch_add(1, std::memory_order_relaxed);
    p.position = x;
    p.deform_grad = (Mat3::Identity() + params.dt * p.affine) * p.deform_grad;
  });
  return clamps.load();
}

double cfl_limit(const ParticleSet& pset, const SceneConfig& scene) {
  double speed = 0.0;
  for (const auto& p : pset.particles)
    if (pset.is_dynamic(p)) speed = std::max(speed, p.velocity.norm());
  for (const auto& [id, mobility] : pset.mobility_of_object)
    if (mobility == Mobility::kDynamic)
      speed = std::max(speed, pset.material_of_object.at(id).wave_speed());
  if (speed <= 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 * scene.spacing() / speed;
}

MpmSolver::MpmSolver(const SceneConfig& scene) : scene_(scene), grid_(GridState::make(scene)) {}

long MpmSolver::substep(ParticleSet& pset, const SubstepParams& params) {
  if (!(params.dt > 0.0)) throw ConfigError("substep dt must be > 0");
  const double limit = cfl_limit(pset, scene_);
  if (params.dt > limit * (1.0 + 1e-12))
    throw ConfigError("dt " + std::to_string(params.dt) + " exceeds the CFL limit " +
                      std::to_string(limit));

  double mass_sum = 0.0;
  std::size_t dyn = 0;
  for (const auto& p : pset.particles)
    if (pset.is_dynamic(p)) {
      mass_sum += p.mass;
      ++dyn;
    }
  if (dyn == 0) return 0;

  grid_.clear();
  p2g(pset, grid_, params);
  grid_update(grid_, params, scene_, mass_sum / static_cast<double>(dyn));
  const long clamps = g2p(pset, grid_, params);

  for (std::size_t pi = 0; pi < pset.particles.size(); ++pi) {
    const SplatParticle& p = pset.particles[pi];
    if (!pset.is_dynamic(p)) continue;
    if (!p.position.allFinite() || !p.velocity.allFinite() || !p.deform_grad.allFinite())
      throw BlowupError("non-finite particle state after substep", static_cast<long>(pi));
    if (!(p.deform_grad.determinant() > 0.0))
      throw BlowupError("deformation gradient inverted (det(F) <= 0)",
                        static_cast<long>(pi));
  }
  return clamps;
}

}  // namespace pseopt
