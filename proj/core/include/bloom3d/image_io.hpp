#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "bloom3d/raster.hpp"

namespace bloom3d {

/// Malformed image file. Carries the offending path and the byte offset at
/// which parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, std::size_t offset, const std::string& what);
  const std::string& path() const { return path_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::size_t offset_;
};

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const RgbImage& image);
RgbImage read_ppm(const std::string& path);

/// Single-channel PFM ("Pf", 32-bit floats, scale -1.0 = little-endian,
/// bottom-up row order).
void write_pfm(const std::string& path, const FloatPlane& plane);
FloatPlane read_pfm(const std::string& path);

/// Three-channel PFM ("PF"), channel-interleaved per PFM convention.
void write_pfm_rgb(const std::string& path, const FloatPlane& c0,
                   const FloatPlane& c1, const FloatPlane& c2);
void read_pfm_rgb(const std::string& path, FloatPlane& c0, FloatPlane& c1,
                  FloatPlane& c2);

}  // namespace bloom3d
