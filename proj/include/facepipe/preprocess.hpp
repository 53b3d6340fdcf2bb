#ifndef FACEPIPE_PREPROCESS_HPP_
#define FACEPIPE_PREPROCESS_HPP_

#include <string>

#include "facepipe/image.hpp"

namespace facepipe::preprocess {

struct EyeAnnotation {
  std::string subject_id;
  std::string image_id;
  Point left_eye;   // left_eye.x < right_eye.x
  Point right_eye;
};

struct CropParams {
  int target_width = 200;
  int target_height = 220;
  double inter_eye_distance = 80.0;  // must be < target_width
  double eye_row = 70.0;             // row of the eye line in the output
};

/// Target eye positions implied by CropParams: eyes horizontal on eye_row,
/// inter_eye_distance apart, centered in the output width.
Point target_left_eye(const CropParams& params);
Point target_right_eye(const CropParams& params);

/// Similarity transform (rotation + uniform scale + translation) mapping a
/// source point into the output frame. Fitted from the two eye
/// correspondences; represented as complex multiply-add.
struct Similarity {
  double ax = 1.0, ay = 0.0;  // complex scale/rotation a = ax + i*ay
  double tx = 0.0, ty = 0.0;  // translation

  Point apply(Point p) const {
    return {ax * p.x - ay * p.y + tx, ay * p.x + ax * p.y + ty};
  }
  Point invert(Point p) const {
    const double px = p.x - tx, py = p.y - ty;
    const double n = ax * ax + ay * ay;
    return {(ax * px + ay * py) / n, (ax * py - ay * px) / n};
  }
};

/// Fits the transform sending the annotated eyes onto the target positions.
/// Throws DegenerateEyes when the eyes are closer than 2 px.
Similarity fit_eye_transform(const EyeAnnotation& eyes, const CropParams& params);

/// Rotates/scales/translates so the eyes land on their target positions, then
/// resamples bilinearly into a target_width x target_height raster.
/// Out-of-source samples clamp to the nearest border pixel.
Image geometric_normalize(const Image& img, const EyeAnnotation& eyes,
                          const CropParams& params);

/// Standard 256-bin CDF remapping:
///   out = round(255 * (cdf(v) - cdf_min) / (N - cdf_min)).
/// A constant image maps to all zeros (cdf(v) == cdf_min everywhere).
Image histogram_equalize(const Image& img);

}  // namespace facepipe::preprocess

#endif  // FACEPIPE_PREPROCESS_HPP_
