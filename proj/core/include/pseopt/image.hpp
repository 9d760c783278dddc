#pragma once

#include <string>
#include <vector>

namespace pseopt {

/// Row-major interleaved image with values in [0,1].
/// Index: (row * width + col) * channels + ch. Row 0 is the window's
/// v-min edge everywhere in this codebase.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  static Image zeros(int width, int height, int channels) {
    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.data.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
    return img;
  }

  double& at(int row, int col, int ch = 0) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  double at(int row, int col, int ch = 0) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// 8-bit PNG I/O. save_png writes grayscale for 1 channel and RGB for 3;
/// load_png returns 1 or 3 channels (paletted/alpha inputs are expanded,
/// 16-bit is narrowed). Values quantize to 1/255 steps.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

}  // namespace pseopt
