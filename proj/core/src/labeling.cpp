#include "bloom3d/labeling.hpp"

#include <algorithm>

namespace bloom3d {

std::vector<Component> label_components(const BytePlane& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<Component> components;
  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int start = y * w + x;
      if (!mask.data[start] || label[start]) continue;
      Component comp;
      comp.label = static_cast<int>(components.size()) + 1;
      comp.bbox = {x, y, x, y};
      stack.assign(1, start);
      label[start] = comp.label;
      double sum_x = 0.0, sum_y = 0.0;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int px = idx % w;
        const int py = idx / w;
        comp.pixels.push_back(idx);
        ++comp.area;
        sum_x += px;
        sum_y += py;
        comp.bbox.x0 = std::min(comp.bbox.x0, px);
        comp.bbox.y0 = std::min(comp.bbox.y0, py);
        comp.bbox.x1 = std::max(comp.bbox.x1, px);
        comp.bbox.y1 = std::max(comp.bbox.y1, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = px + dx;
            const int ny = py + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const int nidx = ny * w + nx;
            if (mask.data[nidx] && !label[nidx]) {
              label[nidx] = comp.label;
              stack.push_back(nidx);
            }
          }
        }
      }
      comp.centroid = PixelPoint{sum_x / comp.area, sum_y / comp.area};
      components.push_back(std::move(comp));
    }
  }
  return components;
}

}  // namespace bloom3d
