#include "bloom3d/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "bloom3d/image_io.hpp"

namespace bloom3d {

void DetectorParams::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (color_lower[c] > color_upper[c]) {
      throw std::invalid_argument("DetectorParams: lower bound exceeds upper");
    }
  }
  if (min_area_px < 1) {
    throw std::invalid_argument("DetectorParams: min_area_px must be >= 1");
  }
  if (morph_radius_px < 0) {
    throw std::invalid_argument("DetectorParams: morph_radius_px must be >= 0");
  }
}

std::array<std::uint8_t, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g,
                                       std::uint8_t b) {
  const int v = std::max({r, g, b});
  const int lo = std::min({r, g, b});
  const int diff = v - lo;
  int s = 0;
  if (v > 0) s = (255 * diff + v / 2) / v;
  int h = 0;
  if (diff > 0) {
    // 30*(..)/diff truncates toward zero (C++ integer division), which is
    // the fixed convention tests rely on.
    if (v == r) {
      h = 30 * (g - b) / diff;
    } else if (v == g) {
      h = 60 + 30 * (b - r) / diff;
    } else {
      h = 120 + 30 * (r - g) / diff;
    }
    if (h < 0) h += 180;
  }
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(s),
          static_cast<std::uint8_t>(v)};
}

BinaryMask threshold_color(const RgbImage& image, const DetectorParams& params) {
  params.validate();
  BinaryMask mask(image.width, image.height, 0);
  const std::uint8_t* p = image.data.data();
  for (std::size_t i = 0; i < mask.data.size(); ++i, p += 3) {
    const auto hsv = rgb_to_hsv(p[0], p[1], p[2]);
    bool in = true;
    for (int c = 0; c < 3; ++c) {
      in = in && hsv[c] >= params.color_lower[c] && hsv[c] <= params.color_upper[c];
    }
    mask.data[i] = in ? 1 : 0;
  }
  return mask;
}

namespace {

enum class MorphOp { erode, dilate };

// Separable min/max filter with a (2r+1) square element. Outside pixels
// count as false, so erosion shrinks regions touching the border.
BinaryMask morph(const BinaryMask& mask, int radius, MorphOp op) {
  const int w = mask.width;
  const int h = mask.height;
  // Out-of-bounds pixels count as false for both passes.
  BinaryMask tmp(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = op == MorphOp::erode ? 1 : 0;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int nx = x + dx;
        const std::uint8_t v = (nx >= 0 && nx < w) ? mask.at(nx, y) : 0;
        acc = op == MorphOp::erode ? std::min(acc, v) : std::max(acc, v);
      }
      tmp.at(x, y) = acc;
    }
  }
  BinaryMask out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = op == MorphOp::erode ? 1 : 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int ny = y + dy;
        const std::uint8_t v = (ny >= 0 && ny < h) ? tmp.at(x, ny) : 0;
        acc = op == MorphOp::erode ? std::min(acc, v) : std::max(acc, v);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

BinaryMask morph_open_close(const BinaryMask& mask, int radius) {
  if (radius < 0) {
    throw std::invalid_argument("morph_open_close: radius must be >= 0");
  }
  if (radius == 0) return mask;
  BinaryMask m = morph(mask, radius, MorphOp::erode);
  m = morph(m, radius, MorphOp::dilate);  // opening done
  m = morph(m, radius, MorphOp::dilate);
  m = morph(m, radius, MorphOp::erode);  // closing done
  return m;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  return label_components(mask);
}

std::vector<Detection> blob_detect(const RgbImage& image,
                                   const DetectorParams& params) {
  params.validate();
  const BinaryMask raw = threshold_color(image, params);
  const BinaryMask mask = morph_open_close(raw, params.morph_radius_px);
  std::vector<Detection> detections;
  for (const Component& comp : connected_components(mask)) {
    if (comp.area < params.min_area_px) continue;
    int matched = 0;
    for (const int idx : comp.pixels) matched += raw.data[idx] ? 1 : 0;
    const double equiv_radius =
        std::sqrt(static_cast<double>(comp.area) / 3.14159265358979323846);
    Detection det;
    det.position = comp.centroid;
    det.cls = equiv_radius >= params.near_radius_threshold_px
                  ? FlowerClass::near
                  : FlowerClass::distant;
    det.confidence = static_cast<double>(matched) / comp.area;
    detections.push_back(det);
  }
  return detections;
}

void write_detections_jsonl(const std::string& path,
                            const std::vector<Detection>& detections) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Detection& d : detections) {
    const nlohmann::json j{{"u", d.position.u},
                           {"v", d.position.v},
                           {"class", to_string(d.cls)},
                           {"confidence", d.confidence}};
    out << j.dump() << "\n";
  }
}

std::vector<Detection> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<Detection> detections;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      try {
        const nlohmann::json j = nlohmann::json::parse(line);
        Detection d;
        d.position = PixelPoint{j.at("u").get<double>(), j.at("v").get<double>()};
        const std::string cls = j.at("class").get<std::string>();
        if (cls == "near") {
          d.cls = FlowerClass::near;
        } else if (cls == "distant") {
          d.cls = FlowerClass::distant;
        } else {
          throw ParseError(path, offset, "unknown class: " + cls);
        }
        d.confidence = j.at("confidence").get<double>();
        detections.push_back(d);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, offset, e.what());
      }
    }
    offset += line.size() + 1;
  }
  return detections;
}

}  // namespace bloom3d
