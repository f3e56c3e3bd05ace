#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace bloom3d {

/// Row-major single-channel raster.
template <class T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) {
    assert(in_bounds(x, y));
    return data[static_cast<std::size_t>(y) * width + x];
  }
  const T& at(int x, int y) const {
    assert(in_bounds(x, y));
    return data[static_cast<std::size_t>(y) * width + x];
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool same_size(const Plane& o) const {
    return width == o.width && height == o.height;
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const Plane&) const = default;
};

using BytePlane = Plane<std::uint8_t>;
using FloatPlane = Plane<float>;
using DoublePlane = Plane<double>;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel, row-major

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    assert(c >= 0 && c < 3 && x >= 0 && x < width && y >= 0 && y < height);
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    assert(c >= 0 && c < 3 && x >= 0 && x < width && y >= 0 && y < height);
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &data[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }

  bool operator==(const RgbImage&) const = default;
};

}  // namespace bloom3d
