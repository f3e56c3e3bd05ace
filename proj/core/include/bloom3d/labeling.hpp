#pragma once

#include <cstdint>
#include <vector>

#include "bloom3d/geometry.hpp"
#include "bloom3d/raster.hpp"

namespace bloom3d {

struct ComponentBBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
};

/// One 8-connected component of a binary mask.
struct Component {
  int label = 0;
  int area = 0;
  PixelPoint centroid;  // unweighted pixel mean
  ComponentBBox bbox;
  std::vector<int> pixels;  // flat indices y*width+x, discovery order
};

/// 8-connected labeling of non-zero pixels. Labels are assigned in
/// row-major order of each component's first pixel, starting at 1.
std::vector<Component> label_components(const BytePlane& mask);

}  // namespace bloom3d
