#pragma once

#include "pseopt/rng.hpp"
#include "pseopt/scene.hpp"
#include "pseopt/types.hpp"

#include <filesystem>
#include <string>

namespace pseopt::test {

/// Fresh per-test scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pseopt_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline Mat3 random_rotation(Pcg32& rng) {
  // Quaternion from four normal-ish uniforms, normalized.
  Vec4 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  while (q.norm() < 1e-3)
    q = Vec4(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

/// Random F with positive determinant and bounded distortion.
inline Mat3 random_deformation(Pcg32& rng, double spread = 0.4) {
  Mat3 F;
  do {
    F = Mat3::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) F(r, c) += rng.uniform(-spread, spread);
  } while (F.determinant() < 0.2);
  return F;
}

/// Minimal one-object dynamic particle set for transfer tests.
inline ParticleSet single_particle_set(const Vec3& position, const Vec3& velocity,
                                       double mass = 0.002, double volume0 = 2e-6) {
  ParticleSet pset;
  SplatParticle p;
  p.position = position;
  p.velocity = velocity;
  p.mass = mass;
  p.volume0 = volume0;
  p.object_id = 2;
  pset.particles.push_back(p);
  pset.material_of_object[2] = MaterialParams{};
  pset.mobility_of_object[2] = Mobility::kDynamic;
  return pset;
}

}  // namespace pseopt::test
