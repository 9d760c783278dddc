#include "pseopt/metrics.hpp"

#include "pseopt/ssim.hpp"

#include <algorithm>
#include <cmath>

namespace pseopt {

PenetrationResult penetration_fraction(const ParticleSet& pset, const SdfField& sdf) {
  PenetrationResult out;
  const double tolerance = -0.5 * sdf.spacing;  // resting contact is not penetration
  std::size_t dynamic = 0, inside = 0;
  double min_distance = 0.0;
  for (const auto& p : pset.particles) {
    if (!pset.is_dynamic(p)) continue;
    ++dynamic;
    const double d = sdf.sample(p.position).distance;
    if (d < tolerance) ++inside;
    min_distance = std::min(min_distance, d);
  }
  if (dynamic > 0)
    out.fraction = static_cast<double>(inside) / static_cast<double>(dynamic);
  out.max_depth = std::max(0.0, -min_distance);
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ConfigError("psnr: image shapes differ");
  if (a.data.empty()) throw ConfigError("psnr: empty images");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse <= 0.0) return 99.0;  // documented cap instead of +inf
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim_metric(const Image& a, const Image& b) { return ssim(a, b); }

ConservationReport conservation_report(const ParticleSet& pset) {
  ConservationReport out;
  for (const auto& p : pset.particles) {
    if (!pset.is_dynamic(p)) continue;
    out.mass += p.mass;
    out.momentum += p.mass * p.velocity;
  }
  return out;
}

}  // namespace pseopt
