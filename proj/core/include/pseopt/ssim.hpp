#pragma once

#include "pseopt/image.hpp"

namespace pseopt {

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over valid window positions (no padding), averaged over
/// channels. Images must share shape and be at least window x window.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

/// SSIM plus its gradient with respect to image `a`.
double ssim_with_gradient(const Image& a, const Image& b, Image& d_ssim_da,
                          const SsimOptions& opts = {});

}  // namespace pseopt
