#pragma once

#include <vector>

#include "bloom3d/detection.hpp"
#include "bloom3d/geometry.hpp"
#include "bloom3d/raster.hpp"

namespace bloom3d {

/// Depth-adaptive Gaussian width: sigma = clamp(k / depth, min, max), so
/// nearer flowers get wider, sharper-to-localize kernels.
struct SigmaLaw {
  double k = 8.0;          // px * m
  double sigma_min = 1.5;  // px
  double sigma_max = 16.0;

  double sigma_for_depth(double depth_m) const;
  void validate() const;
};

/// Three-channel center heatmap: near flowers, distant flowers, background.
/// All values in [0,1]; background is 1 - max(near, distant) at every pixel.
struct HeatmapStack {
  FloatPlane near;
  FloatPlane distant;
  FloatPlane background;
};

/// A point the encoder turns into a Gaussian peak. Decoupled from
/// FlowerAnnotation so either eye (or synthetic fixtures) can be encoded.
struct EncodedPoint {
  PixelPoint center;
  double depth_m = 1.0;
};

/// Splits a depth into near/distant at tau; the tie at exactly tau goes to
/// distant. Throws std::domain_error for non-positive depth.
FlowerClass classify_by_depth(double depth_m, double tau_m);

/// Renders Gaussian peaks (peak value 1.0 at the rounded center pixel,
/// support truncated at 4 sigma) into the class channel picked by
/// classify_by_depth. Overlapping kernels combine by pixel-wise max, which
/// keeps every channel inside [0,1]. Out-of-bounds centers are skipped.
HeatmapStack encode_heatmaps(const std::vector<EncodedPoint>& points,
                             int width, int height, double tau_m,
                             const SigmaLaw& law);

/// Thresholds each class channel, labels 8-connected components and emits
/// one detection per component: position = value-weighted centroid,
/// confidence = component peak. Throws std::invalid_argument unless
/// threshold is in (0,1).
std::vector<Detection> decode_heatmaps(const HeatmapStack& stack,
                                       double threshold);

/// Depth scaling used by the training targets: s = d/8 and back.
double scale_depth(double depth_m);
double unscale_depth(double scaled);

}  // namespace bloom3d
