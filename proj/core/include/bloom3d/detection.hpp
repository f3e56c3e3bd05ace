#pragma once

#include <string>

#include "bloom3d/geometry.hpp"

namespace bloom3d {

/// Near/distant split at the tau depth threshold. "Near" is the graspable
/// class and drives most downstream decisions.
enum class FlowerClass { near, distant };

inline const char* to_string(FlowerClass c) {
  return c == FlowerClass::near ? "near" : "distant";
}

/// One 2D flower-center detection, detector-agnostic.
struct Detection {
  PixelPoint position;
  FlowerClass cls = FlowerClass::near;
  double confidence = 1.0;  // in [0, 1]
};

}  // namespace bloom3d
