#include "pseopt/ssim.hpp"

#include "pseopt/types.hpp"

#include <cmath>
#include <vector>

namespace pseopt {

static std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      w[static_cast<std::size_t>(i) * size + j] = std::exp(-d2 / (2.0 * sigma * sigma));
      sum += w[static_cast<std::size_t>(i) * size + j];
    }
  for (double& v : w) v /= sum;
  return w;
}

// Mean local SSIM over valid window placements; optionally scatters the
// gradient with respect to `a` into *d_a (same shape as a, pre-zeroed by
// the caller). One fused pass per channel keeps SSIM(I, I) exactly 1: for
// identical inputs every window evaluates numerator == denominator.
static double ssim_impl(const Image& a, const Image& b, Image* d_a, const SsimOptions& opts) {
  if (!a.same_shape(b)) throw ConfigError("ssim: image shapes differ");
  const int win = opts.window;
  if (a.width < win || a.height < win)
    throw ConfigError("ssim: image smaller than the " + std::to_string(win) + "x" +
                      std::to_string(win) + " window");
  const std::vector<double> g = gaussian_window(win, opts.sigma);
  const double c1 = opts.k1 * opts.k1 * opts.dynamic_range * opts.dynamic_range;
  const double c2 = opts.k2 * opts.k2 * opts.dynamic_range * opts.dynamic_range;

  const int rows = a.height - win + 1;
  const int cols = a.width - win + 1;
  const double inv_count = 1.0 / (static_cast<double>(rows) * cols * a.channels);

  double total = 0.0;
  for (int ch = 0; ch < a.channels; ++ch) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double w = g[static_cast<std::size_t>(i) * win + j];
            const double x = a.at(r + i, c + j, ch);
            const double y = b.at(r + i, c + j, ch);
            mx += w * x;
            my += w * y;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cov = sxy - mx * my;
        const double a1 = 2.0 * mx * my + c1;
        const double a2 = 2.0 * cov + c2;
        const double b1 = mx * mx + my * my + c1;
        const double b2 = vx + vy + c2;
        const double s = (a1 * a2) / (b1 * b2);
        total += s;

        if (d_a) {
          // Partials of s with respect to the window statistics of `a`.
          const double d_mx = 2.0 * (my * a2 * b1 - mx * a1 * a2) / (b1 * b1 * b2);
          const double d_vx = -a1 * a2 / (b1 * b2 * b2);
          const double d_cov = 2.0 * a1 / (b1 * b2);
          for (int i = 0; i < win; ++i)
            for (int j = 0; j < win; ++j) {
              const double w = g[static_cast<std::size_t>(i) * win + j];
              const double x = a.at(r + i, c + j, ch);
              const double y = b.at(r + i, c + j, ch);
              d_a->at(r + i, c + j, ch) +=
                  inv_count * w *
                  (d_mx + 2.0 * d_vx * (x - mx) + d_cov * (y - my));
            }
        }
      }
    }
  }
  return total * inv_count;
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
  return ssim_impl(a, b, nullptr, opts);
}

double ssim_with_gradient(const Image& a, const Image& b, Image& d_ssim_da,
                          const SsimOptions& opts) {
  d_ssim_da = Image::zeros(a.width, a.height, a.channels);
  return ssim_impl(a, b, &d_ssim_da, opts);
}

}  // namespace pseopt
