#pragma once

#include "pseopt/scene.hpp"
#include "pseopt/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace pseopt {

/// Grid-sampled signed distance field. Negative strictly inside the solid.
/// Sample (i,j,k) sits at origin + (i,j,k) * spacing; storage is row-major
/// with k fastest: index = (i * ny + j) * nz + k.
struct SdfField {
  Vec3i resolution = Vec3i::Zero();  // samples per axis
  double spacing = 0.0;              // m
  Vec3 origin = Vec3::Zero();
  std::vector<float> values;         // m

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * resolution.y() + j) * resolution.z() + k;
  }
  double value_at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 sample_position(int i, int j, int k) const {
    return origin + spacing * Vec3(i, j, k);
  }
  Vec3 box_max() const { return origin + spacing * (resolution - Vec3i::Ones()).cast<double>(); }

  struct Sample {
    double distance = 0.0;
    Vec3 normal = Vec3(0, 0, 1);
    bool clamped = false;  // query fell outside the sampled box
  };

  /// Trilinear distance and normalized central-difference gradient
  /// (step = spacing). Out-of-box queries are clamped and flagged.
  Sample sample(const Vec3& x) const;

  /// Max |value step| / spacing between adjacent samples; an exact SDF is
  /// 1-Lipschitz so this stays near 1. Diagnostic for tests.
  double max_adjacent_slope() const;
};

/// Samples the analytic signed distance of a primitive over a box grid.
/// `resolution` is the per-axis sample count (>= 2).
SdfField sdf_from_primitive(const ShapeSpec& shape, const Vec3& box_min, const Vec3& box_max,
                            int resolution);

/// Unsigned nearest-point distance minus `offset`, sampled over the box.
/// This thickens the cloud into a shell; it is a pseudo-SDF with no inside
/// sign, suitable only as a soft boundary. Throws ConfigError for fewer
/// than 10 points.
SdfField sdf_from_points(std::span<const Vec3> points, const Vec3& box_min,
                         const Vec3& box_max, int resolution, double offset);

/// Collision response at one grid node. Outside the solid (distance >= 0)
/// the velocity passes through. Inside: sticky zeroes it, slip removes only
/// the inward normal component so separating motion is never blocked.
Vec3 project_velocity(const Vec3& v, double distance, const Vec3& normal, BoundaryMode mode);

/// Flat binary serialization: magic "PSDF", u32 version, 3x u32 resolution,
/// 3x f64 origin, f64 spacing, then row-major f32 values. Little-endian.
void write_psdf(const SdfField& sdf, const std::string& path);
SdfField read_psdf(const std::string& path);

}  // namespace pseopt
