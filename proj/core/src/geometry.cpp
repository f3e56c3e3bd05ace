#include "bloom3d/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace bloom3d {

void CameraIntrinsics::validate() const {
  if (!(focal_length_mm > 0.0)) {
    throw std::invalid_argument("CameraIntrinsics: focal_length_mm must be > 0");
  }
  if (!(pixel_pitch_mm > 0.0)) {
    throw std::invalid_argument("CameraIntrinsics: pixel_pitch_mm must be > 0");
  }
  if (focal_px_override && !(*focal_px_override > 0.0)) {
    throw std::invalid_argument("CameraIntrinsics: focal_px_override must be > 0");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("CameraIntrinsics: image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw std::invalid_argument("CameraIntrinsics: principal point outside image");
  }
}

void StereoRig::validate() const {
  intrinsics.validate();
  if (!(baseline_m > 0.0)) {
    throw std::invalid_argument("StereoRig: baseline_m must be > 0");
  }
}

PixelPoint project(const StereoRig& rig, const Point3& p, Eye eye) {
  if (!(p.z > 0.0)) {
    throw std::domain_error("project: point must lie in front of the camera (z > 0)");
  }
  const double f = rig.intrinsics.focal_px();
  const double x = eye == Eye::left ? p.x : p.x - rig.baseline_m;
  return PixelPoint{f * x / p.z + rig.intrinsics.cx,
                    f * p.y / p.z + rig.intrinsics.cy};
}

double disparity_of_depth(const StereoRig& rig, double z_m) {
  if (!(z_m > 0.0)) {
    throw std::domain_error("disparity_of_depth: depth must be > 0");
  }
  return rig.baseline_m * rig.intrinsics.focal_px() / z_m;
}

double triangulate_depth(const StereoRig& rig, double disparity_px) {
  if (!(disparity_px > 0.0)) {
    throw std::domain_error("triangulate_depth: disparity must be > 0");
  }
  return rig.baseline_m * rig.intrinsics.focal_px() / disparity_px;
}

Point3 backproject(const StereoRig& rig, const PixelPoint& left_pt,
                   double depth_m) {
  if (!(depth_m > 0.0)) {
    throw std::domain_error("backproject: depth must be > 0");
  }
  const double f = rig.intrinsics.focal_px();
  return Point3{(left_pt.u - rig.intrinsics.cx) * depth_m / f,
                (left_pt.v - rig.intrinsics.cy) * depth_m / f, depth_m};
}

std::pair<double, double> disparity_bounds(const StereoRig& rig, double z_min,
                                           double z_max) {
  if (!(z_min > 0.0) || !(z_min < z_max)) {
    throw std::domain_error("disparity_bounds: need 0 < z_min < z_max");
  }
  return {disparity_of_depth(rig, z_max), disparity_of_depth(rig, z_min)};
}

}  // namespace bloom3d
