#pragma once

#include <optional>
#include <utility>

namespace bloom3d {

/// 2D image point with sub-pixel resolution, pixel units.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// 3D point in the left-camera frame, meters. +z forward, +x toward the
/// right camera, +y down (image v grows with y).
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Pinhole intrinsics shared by both eyes of the rig. The focal length in
/// pixels is derived from the physical quantities unless focal_px_override
/// is set (synthetic datasets override it to decouple pixel scale from the
/// physical sensor description).
struct CameraIntrinsics {
  double focal_length_mm = 26.0;
  double pixel_pitch_mm = 0.325;
  std::optional<double> focal_px_override;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  double focal_px() const {
    return focal_px_override ? *focal_px_override
                             : focal_length_mm / pixel_pitch_mm;
  }

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Rectified parallel stereo pair: left camera at the origin, right camera
/// displaced by +baseline_m along +x. Corresponding points share a row.
struct StereoRig {
  CameraIntrinsics intrinsics;
  double baseline_m = 0.065;

  void validate() const;
};

enum class Eye { left, right };

/// Projects a 3D point (left-camera frame) into the requested eye.
/// The result may fall outside the image bounds; callers decide visibility.
/// Throws std::domain_error when p.z <= 0.
PixelPoint project(const StereoRig& rig, const Point3& p, Eye eye);

/// Disparity (u_left - u_right) of a point at depth z: b * f_px / z.
/// Throws std::domain_error when z <= 0.
double disparity_of_depth(const StereoRig& rig, double z_m);

/// Metric depth from disparity: b * f_px / d. Strictly decreasing in d.
/// Throws std::domain_error when disparity <= 0 (failed/degenerate match).
double triangulate_depth(const StereoRig& rig, double disparity_px);

/// Lifts a left-image point at a known depth back into the left-camera
/// frame. Inverse of project(rig, ., Eye::left).
/// Throws std::domain_error when depth <= 0.
Point3 backproject(const StereoRig& rig, const PixelPoint& left_pt,
                   double depth_m);

/// Disparity search interval implied by a depth range:
/// (d_min, d_max) = (b*f/z_max, b*f/z_min). Defines the scanline strip.
/// Throws std::domain_error unless 0 < z_min < z_max.
std::pair<double, double> disparity_bounds(const StereoRig& rig, double z_min,
                                           double z_max);

}  // namespace bloom3d
