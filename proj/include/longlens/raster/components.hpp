#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "longlens/raster/image.hpp"

namespace longlens {

enum class Connectivity { Four, Eight };

struct Component {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  std::size_t area = 0;

  [[nodiscard]] std::size_t first_index() const { return pixels.front(); }
};

/// Labels maximal connected sets of true pixels. Components come back sorted
/// by area descending, ties broken by smallest row-major pixel index.
inline std::vector<Component> connected_components(const ValidityMask& mask, Connectivity conn) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Component> out;
  std::vector<std::size_t> stack;

  static constexpr int kDx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int n_neighbors = conn == Connectivity::Four ? 4 : 8;

  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    Component comp;
    seen[start] = 1;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const int x = static_cast<int>(idx % static_cast<std::size_t>(w));
      const int y = static_cast<int>(idx / static_cast<std::size_t>(w));
      for (int k = 0; k < n_neighbors; ++k) {
        const int nx = x + kDx8[k];
        const int ny = y + kDy8[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t nidx = mask.index(nx, ny);
        if (mask[nidx] && !seen[nidx]) {
          seen[nidx] = 1;
          stack.push_back(nidx);
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    comp.area = comp.pixels.size();
    out.push_back(std::move(comp));
  }

  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.first_index() < b.first_index();
  });
  return out;
}

inline ValidityMask component_mask(const Component& c, int width, int height) {
  ValidityMask m(width, height);
  for (std::size_t idx : c.pixels) m.set(idx);
  return m;
}

}  // namespace longlens
