#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bloom3d/detection.hpp"
#include "bloom3d/labeling.hpp"
#include "bloom3d/raster.hpp"

namespace bloom3d {

using BinaryMask = BytePlane;  // 0/1 per pixel, image-sized

/// Classical color-threshold detector parameters. Bounds are inclusive,
/// per channel of the HSV-style transform (H in [0,180), S and V in
/// [0,255]).
struct DetectorParams {
  std::array<std::uint8_t, 3> color_lower{140, 80, 60};
  std::array<std::uint8_t, 3> color_upper{179, 255, 255};
  int min_area_px = 16;
  int morph_radius_px = 1;
  double near_radius_threshold_px = 12.0;

  void validate() const;
};

/// Integer-exact RGB -> HSV-style transform (H halved into [0,180) like the
/// common 8-bit convention; S rounded, V = max). Pure integer arithmetic so
/// masks are identical on every platform.
std::array<std::uint8_t, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g,
                                       std::uint8_t b);

/// Pixel-wise in-range test in the transformed color space.
BinaryMask threshold_color(const RgbImage& image, const DetectorParams& params);

/// Morphological opening then closing with a square structuring element of
/// side 2*radius+1. Radius 0 is the identity.
BinaryMask morph_open_close(const BinaryMask& mask, int radius);

/// 8-connected components with unweighted centroids; label order is
/// row-major by first pixel.
std::vector<Component> connected_components(const BinaryMask& mask);

/// Full classical pipeline: threshold -> morphology -> components ->
/// min-area filter. Class is assigned by apparent size (depth is unknown
/// before matching); confidence is the fraction of component pixels that
/// passed the raw color test.
std::vector<Detection> blob_detect(const RgbImage& image,
                                   const DetectorParams& params);

/// JSONL records {u, v, class, confidence}; the same schema is used for
/// oracle detections so downstream tooling is source-agnostic.
void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& detections);
std::vector<Detection> read_detections_jsonl(const std::string& path);

}  // namespace bloom3d
