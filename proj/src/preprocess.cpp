#include "facepipe/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "facepipe/error.hpp"

namespace facepipe::preprocess {

namespace {

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Bilinear sample with border clamp.
double sample_bilinear(const Image& img, double x, double y) {
  x = clampd(x, 0.0, img.width - 1.0);
  y = clampd(y, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

}  // namespace

Point target_left_eye(const CropParams& params) {
  return {(params.target_width - params.inter_eye_distance) / 2.0, params.eye_row};
}

Point target_right_eye(const CropParams& params) {
  return {(params.target_width + params.inter_eye_distance) / 2.0, params.eye_row};
}

Similarity fit_eye_transform(const EyeAnnotation& eyes, const CropParams& params) {
  const double dx = eyes.right_eye.x - eyes.left_eye.x;
  const double dy = eyes.right_eye.y - eyes.left_eye.y;
  const double dist = std::hypot(dx, dy);
  if (dist < 2.0)
    throw Error(Errc::degenerate_eyes,
                "eye distance " + std::to_string(dist) + " px is below 2 px");

  const Point tl = target_left_eye(params);
  const Point tr = target_right_eye(params);
  // a = (w2 - w1) / (z2 - z1) in complex arithmetic.
  const double wx = tr.x - tl.x, wy = tr.y - tl.y;
  const double n = dx * dx + dy * dy;
  Similarity t;
  t.ax = (wx * dx + wy * dy) / n;
  t.ay = (wy * dx - wx * dy) / n;
  t.tx = tl.x - (t.ax * eyes.left_eye.x - t.ay * eyes.left_eye.y);
  t.ty = tl.y - (t.ay * eyes.left_eye.x + t.ax * eyes.left_eye.y);
  return t;
}

Image geometric_normalize(const Image& img, const EyeAnnotation& eyes,
                          const CropParams& params) {
  if (!img.valid()) throw Error(Errc::invalid_argument, "invalid input image");
  if (params.inter_eye_distance >= params.target_width ||
      params.eye_row >= params.target_height)
    throw Error(Errc::invalid_argument, "crop parameters out of range");

  const Similarity t = fit_eye_transform(eyes, params);
  Image out(params.target_width, params.target_height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Point src = t.invert({static_cast<double>(x), static_cast<double>(y)});
      const double v = sample_bilinear(img, src.x, src.y);
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(clampd(v, 0.0, 255.0)));
    }
  }
  return out;
}

Image histogram_equalize(const Image& img) {
  if (!img.valid()) throw Error(Errc::invalid_argument, "invalid input image");

  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : img.data) ++hist[v];

  std::array<std::size_t, 256> cdf{};
  std::size_t running = 0;
  std::size_t cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    running += hist[v];
    cdf[v] = running;
    if (cdf_min == 0 && running > 0) cdf_min = running;
  }

  const std::size_t n = img.pixel_count();
  std::array<std::uint8_t, 256> lut{};
  if (n > cdf_min) {
    const double denom = static_cast<double>(n - cdf_min);
    for (int v = 0; v < 256; ++v) {
      const double num = static_cast<double>(cdf[v] - std::min(cdf[v], cdf_min));
      lut[v] = static_cast<std::uint8_t>(std::lround(255.0 * num / denom));
    }
  }
  // else: constant image, cdf(v) == cdf_min for the one occupied bin -> all 0.

  Image out(img.width, img.height);
  for (std::size_t i = 0; i < n; ++i) out.data[i] = lut[img.data[i]];
  return out;
}

}  // namespace facepipe::preprocess
