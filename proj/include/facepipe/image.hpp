#ifndef FACEPIPE_IMAGE_HPP_
#define FACEPIPE_IMAGE_HPP_

#include <cstdint>
#include <vector>

namespace facepipe {

/// 8-bit grayscale raster, row-major, intensities in [0, 255].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool valid() const { return width > 0 && height > 0 && data.size() == pixel_count(); }
};

/// Real-valued raster used for filter responses and linearity-sensitive math.
struct RealImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

inline RealImage to_real(const Image& img) {
  RealImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i];
  return out;
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

}  // namespace facepipe

#endif  // FACEPIPE_IMAGE_HPP_
