#include "pseopt/sdf.hpp"

#include "pseopt/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>

namespace pseopt {

// Clamped trilinear lookup; the workhorse behind sample().
static double trilinear(const SdfField& f, const Vec3& x, bool* clamped) {
  Vec3 t = (x - f.origin) / f.spacing;
  for (int a = 0; a < 3; ++a) {
    const double hi = static_cast<double>(f.resolution[a] - 1);
    if (t[a] < 0.0 || t[a] > hi) {
      if (clamped) *clamped = true;
      t[a] = std::clamp(t[a], 0.0, hi);
    }
  }
  Vec3i i0;
  Vec3 w;
  for (int a = 0; a < 3; ++a) {
    i0[a] = std::min(static_cast<int>(t[a]), f.resolution[a] - 2);
    i0[a] = std::max(i0[a], 0);
    w[a] = t[a] - i0[a];
  }
  double acc = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double weight = (di ? w.x() : 1.0 - w.x()) * (dj ? w.y() : 1.0 - w.y()) *
                              (dk ? w.z() : 1.0 - w.z());
        acc += weight * f.value_at(i0.x() + di, i0.y() + dj, i0.z() + dk);
      }
  return acc;
}

SdfField::Sample SdfField::sample(const Vec3& x) const {
  Sample s;
  s.distance = trilinear(*this, x, &s.clamped);
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 dx = Vec3::Zero();
    dx[a] = spacing;
    g[a] = (trilinear(*this, x + dx, nullptr) - trilinear(*this, x - dx, nullptr)) /
           (2.0 * spacing);
  }
  const double gn = g.norm();
  s.normal = gn > 1e-12 ? Vec3(g / gn) : Vec3(0, 0, 1);
  return s;
}

double SdfField::max_adjacent_slope() const {
  double worst = 0.0;
  for (int i = 0; i < resolution.x(); ++i)
    for (int j = 0; j < resolution.y(); ++j)
      for (int k = 0; k < resolution.z(); ++k) {
        const double v = value_at(i, j, k);
        if (i + 1 < resolution.x())
          worst = std::max(worst, std::abs(value_at(i + 1, j, k) - v));
        if (j + 1 < resolution.y())
          worst = std::max(worst, std::abs(value_at(i, j + 1, k) - v));
        if (k + 1 < resolution.z())
          worst = std::max(worst, std::abs(value_at(i, j, k + 1) - v));
      }
  return worst / spacing;
}

static SdfField make_field(const Vec3& box_min, const Vec3& box_max, int resolution) {
  if (resolution < 2) throw ConfigError("sdf resolution must be >= 2");
  if (!((box_max - box_min).minCoeff() > 0.0)) throw ConfigError("sdf box is degenerate");
  const Vec3 extent = box_max - box_min;
  if (std::abs(extent.maxCoeff() - extent.minCoeff()) > 1e-9 * extent.maxCoeff())
    throw ConfigError("sdf sample box must be a cube (uniform spacing)");
  SdfField f;
  f.resolution = Vec3i::Constant(resolution);
  f.origin = box_min;
  f.spacing = extent.x() / (resolution - 1);
  f.values.resize(static_cast<std::size_t>(resolution) * resolution * resolution);
  return f;
}

SdfField sdf_from_primitive(const ShapeSpec& shape, const Vec3& box_min, const Vec3& box_max,
                            int resolution) {
  SdfField f = make_field(box_min, box_max, resolution);
  const int ny = f.resolution.y(), nz = f.resolution.z();
  parallel_for(f.resolution.x(), [&](std::int64_t i) {
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k)
        f.values[f.index(static_cast<int>(i), j, k)] = static_cast<float>(
            shape.signed_distance(f.sample_position(static_cast<int>(i), j, k)));
  });
  return f;
}

SdfField sdf_from_points(std::span<const Vec3> points, const Vec3& box_min,
                         const Vec3& box_max, int resolution, double offset) {
  if (points.size() < 10)
    throw ConfigError("sdf_from_points needs at least 10 points, got " +
                      std::to_string(points.size()));
  SdfField f = make_field(box_min, box_max, resolution);
  const int ny = f.resolution.y(), nz = f.resolution.z();
  parallel_for(f.resolution.x(), [&](std::int64_t i) {
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const Vec3 x = f.sample_position(static_cast<int>(i), j, k);
        double best = std::numeric_limits<double>::max();
        for (const Vec3& p : points) best = std::min(best, (x - p).squaredNorm());
        f.values[f.index(static_cast<int>(i), j, k)] =
            static_cast<float>(std::sqrt(best) - offset);
      }
  });
  return f;
}

Vec3 project_velocity(const Vec3& v, double distance, const Vec3& normal, BoundaryMode mode) {
  if (distance >= 0.0) return v;
  if (mode == BoundaryMode::kSticky) return Vec3::Zero();
  // Slip: remove the inward normal component only; separating velocities
  // pass through untouched.
  const double vn = v.dot(normal);
  return vn < 0.0 ? Vec3(v - vn * normal) : v;
}

// ---------------------------------------------------------------------------
// PSDF serialization (little-endian)

namespace {

void put_u32(std::FILE* fp, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  std::fwrite(b, 1, 4, fp);
}

void put_u64(std::FILE* fp, std::uint64_t v) {
  put_u32(fp, static_cast<std::uint32_t>(v));
  put_u32(fp, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::FILE* fp, double v) { put_u64(fp, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::FILE* fp, float v) { put_u32(fp, std::bit_cast<std::uint32_t>(v)); }

bool get_u32(std::FILE* fp, std::uint32_t& v) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, fp) != 4) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool get_f64(std::FILE* fp, double& v) {
  std::uint32_t lo, hi;
  if (!get_u32(fp, lo) || !get_u32(fp, hi)) return false;
  v = std::bit_cast<double>((static_cast<std::uint64_t>(hi) << 32) | lo);
  return true;
}

bool get_f32(std::FILE* fp, float& v) {
  std::uint32_t u;
  if (!get_u32(fp, u)) return false;
  v = std::bit_cast<float>(u);
  return true;
}

constexpr std::uint32_t kPsdfVersion = 1;

}  // namespace

void write_psdf(const SdfField& sdf, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing", path);
  std::fwrite("PSDF", 1, 4, fp);
  put_u32(fp, kPsdfVersion);
  for (int a = 0; a < 3; ++a) put_u32(fp, static_cast<std::uint32_t>(sdf.resolution[a]));
  for (int a = 0; a < 3; ++a) put_f64(fp, sdf.origin[a]);
  put_f64(fp, sdf.spacing);
  for (float v : sdf.values) put_f32(fp, v);
  if (std::fclose(fp) != 0) throw IoError("write failed", path);
}

SdfField read_psdf(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open", path);
  struct Closer {
    std::FILE* fp;
    ~Closer() { std::fclose(fp); }
  } closer{fp};

  char magic[4];
  if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "PSDF", 4) != 0)
    throw IoError("not a PSDF file (bad magic)", path);
  std::uint32_t version = 0;
  if (!get_u32(fp, version) || version != kPsdfVersion)
    throw IoError("unsupported PSDF version", path);

  SdfField f;
  for (int a = 0; a < 3; ++a) {
    std::uint32_t r = 0;
    if (!get_u32(fp, r) || r < 2 || r > (1u << 20))
      throw IoError("bad PSDF resolution", path);
    f.resolution[a] = static_cast<int>(r);
  }
  for (int a = 0; a < 3; ++a)
    if (!get_f64(fp, f.origin[a])) throw IoError("truncated PSDF header", path);
  if (!get_f64(fp, f.spacing) || !(f.spacing > 0.0))
    throw IoError("bad PSDF spacing", path);

  const std::size_t n = static_cast<std::size_t>(f.resolution.x()) * f.resolution.y() *
                        f.resolution.z();
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!get_f32(fp, f.values[i])) throw IoError("truncated PSDF data", path);
  return f;
}

}  // namespace pseopt
