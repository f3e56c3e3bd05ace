#include "bloom3d/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bloom3d/labeling.hpp"

namespace bloom3d {

void SigmaLaw::validate() const {
  if (!(k > 0.0) || !(sigma_min > 0.0) || !(sigma_min <= sigma_max)) {
    throw std::invalid_argument("SigmaLaw: need k > 0 and 0 < sigma_min <= sigma_max");
  }
}

double SigmaLaw::sigma_for_depth(double depth_m) const {
  return std::clamp(k / depth_m, sigma_min, sigma_max);
}

FlowerClass classify_by_depth(double depth_m, double tau_m) {
  if (!(depth_m > 0.0)) {
    throw std::domain_error("classify_by_depth: depth must be > 0");
  }
  return depth_m < tau_m ? FlowerClass::near : FlowerClass::distant;
}

HeatmapStack encode_heatmaps(const std::vector<EncodedPoint>& points,
                             int width, int height, double tau_m,
                             const SigmaLaw& law) {
  law.validate();
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("encode_heatmaps: image size must be positive");
  }
  HeatmapStack stack;
  stack.near = FloatPlane(width, height, 0.0f);
  stack.distant = FloatPlane(width, height, 0.0f);
  stack.background = FloatPlane(width, height, 1.0f);

  for (const EncodedPoint& pt : points) {
    // Centers are quantized to the pixel grid so the peak value is exactly
    // 1.0 at the ground-truth center pixel.
    const int cx = static_cast<int>(std::llround(pt.center.u));
    const int cy = static_cast<int>(std::llround(pt.center.v));
    if (cx < 0 || cx >= width || cy < 0 || cy >= height) continue;
    const double sigma = law.sigma_for_depth(pt.depth_m);
    FloatPlane& channel = classify_by_depth(pt.depth_m, tau_m) == FlowerClass::near
                              ? stack.near
                              : stack.distant;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    const int x0 = std::max(0, cx - radius);
    const int x1 = std::min(width - 1, cx + radius);
    const int y0 = std::max(0, cy - radius);
    const int y1 = std::min(height - 1, cy + radius);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = static_cast<double>(x - cx) * (x - cx) +
                          static_cast<double>(y - cy) * (y - cy);
        const float g = static_cast<float>(std::exp(-d2 * inv_two_sigma2));
        float& cell = channel.at(x, y);
        cell = std::max(cell, g);
      }
    }
  }

  for (std::size_t i = 0; i < stack.background.data.size(); ++i) {
    stack.background.data[i] =
        1.0f - std::max(stack.near.data[i], stack.distant.data[i]);
  }
  return stack;
}

namespace {

void decode_channel(const FloatPlane& channel, FlowerClass cls,
                    double threshold, std::vector<Detection>& out) {
  BytePlane mask(channel.width, channel.height, 0);
  for (std::size_t i = 0; i < channel.data.size(); ++i) {
    mask.data[i] = channel.data[i] >= threshold ? 1 : 0;
  }
  for (const Component& comp : label_components(mask)) {
    double sum_w = 0.0, sum_x = 0.0, sum_y = 0.0;
    float peak = 0.0f;
    for (const int idx : comp.pixels) {
      const double v = channel.data[idx];
      const int x = idx % channel.width;
      const int y = idx / channel.width;
      sum_w += v;
      sum_x += v * x;
      sum_y += v * y;
      peak = std::max(peak, channel.data[idx]);
    }
    Detection det;
    det.position = PixelPoint{sum_x / sum_w, sum_y / sum_w};
    det.cls = cls;
    det.confidence = peak;
    out.push_back(det);
  }
}

}  // namespace

std::vector<Detection> decode_heatmaps(const HeatmapStack& stack,
                                       double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("decode_heatmaps: threshold must be in (0,1)");
  }
  std::vector<Detection> detections;
  decode_channel(stack.near, FlowerClass::near, threshold, detections);
  decode_channel(stack.distant, FlowerClass::distant, threshold, detections);
  return detections;
}

double scale_depth(double depth_m) { return depth_m / 8.0; }

double unscale_depth(double scaled) { return scaled * 8.0; }

}  // namespace bloom3d
