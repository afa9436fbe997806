#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

/// Elliptical structuring element with odd width and height. Offset (dx, dy)
/// belongs to the element iff (dx/a)^2 + (dy/b)^2 <= 1 with a = (w-1)/2 and
/// b = (h-1)/2; evaluated in integers as dx^2 b^2 + dy^2 a^2 <= a^2 b^2.
class StructuringElement {
 public:
  static StructuringElement ellipse(int width, int height) { return StructuringElement(width, height); }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int half_height() const { return (height_ - 1) / 2; }

  /// Half-width of the element's row at vertical offset dy, or -1 if the row is empty.
  [[nodiscard]] int row_half_width(int dy) const { return row_half_widths_[static_cast<std::size_t>(dy + half_height())]; }

  [[nodiscard]] bool contains(int dx, int dy) const {
    if (dy < -half_height() || dy > half_height()) return false;
    const int k = row_half_width(dy);
    return dx >= -k && dx <= k;
  }

  [[nodiscard]] std::size_t area() const {
    std::size_t n = 0;
    for (int k : row_half_widths_) n += k < 0 ? 0 : static_cast<std::size_t>(2 * k + 1);
    return n;
  }

 private:
  StructuringElement(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1 || width % 2 == 0 || height % 2 == 0)
      throw ConfigError("structuring element dimensions must be odd and >= 1");
    const long a = (width - 1) / 2;
    const long b = (height - 1) / 2;
    for (long dy = -b; dy <= b; ++dy) {
      int k = -1;
      for (long dx = 0; dx <= a; ++dx) {
        bool inside = true;  // b == 0: the single row dy == 0 spans the full width
        if (a == 0) {
          inside = dx == 0;
        } else if (b != 0) {
          inside = dx * dx * b * b + dy * dy * a * a <= a * a * b * b;
        }
        if (!inside) break;
        k = static_cast<int>(dx);
      }
      row_half_widths_.push_back(k);
    }
  }

  int width_;
  int height_;
  std::vector<int> row_half_widths_;
};

enum class MorphOp { Erode, Dilate, Close, Open };

namespace detail {

// Per-row prefix counts of true pixels: prefix[y][x] = count in [0, x).
inline std::vector<std::vector<std::uint32_t>> row_prefix_counts(const ValidityMask& m) {
  std::vector<std::vector<std::uint32_t>> prefix(static_cast<std::size_t>(m.height()));
  for (int y = 0; y < m.height(); ++y) {
    auto& row = prefix[static_cast<std::size_t>(y)];
    row.assign(static_cast<std::size_t>(m.width()) + 1, 0);
    for (int x = 0; x < m.width(); ++x) row[static_cast<std::size_t>(x) + 1] = row[static_cast<std::size_t>(x)] + (m.at(x, y) ? 1u : 0u);
  }
  return prefix;
}

inline ValidityMask dilate(const ValidityMask& m, const StructuringElement& se) {
  const auto prefix = row_prefix_counts(m);
  ValidityMask out(m.width(), m.height());
  const int hb = se.half_height();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool hit = false;
      for (int dy = -hb; dy <= hb && !hit; ++dy) {
        const int k = se.row_half_width(dy);
        const int yy = y + dy;
        if (k < 0 || yy < 0 || yy >= m.height()) continue;
        const int lo = std::max(0, x - k);
        const int hi = std::min(m.width() - 1, x + k);
        const auto& row = prefix[static_cast<std::size_t>(yy)];
        hit = row[static_cast<std::size_t>(hi) + 1] > row[static_cast<std::size_t>(lo)];
      }
      if (hit) out.set(x, y);
    }
  }
  return out;
}

inline ValidityMask erode(const ValidityMask& m, const StructuringElement& se) {
  const auto prefix = row_prefix_counts(m);
  ValidityMask out(m.width(), m.height());
  const int hb = se.half_height();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      bool keep = true;
      for (int dy = -hb; dy <= hb && keep; ++dy) {
        const int k = se.row_half_width(dy);
        if (k < 0) continue;
        const int yy = y + dy;
        // Outside the raster counts as false.
        if (yy < 0 || yy >= m.height() || x - k < 0 || x + k >= m.width()) {
          keep = false;
          break;
        }
        const auto& row = prefix[static_cast<std::size_t>(yy)];
        keep = row[static_cast<std::size_t>(x + k) + 1] - row[static_cast<std::size_t>(x - k)] ==
               static_cast<std::uint32_t>(2 * k + 1);
      }
      if (keep) out.set(x, y);
    }
  }
  return out;
}

}  // namespace detail

/// Binary morphology with out-of-bounds pixels treated as false.
/// Close = dilate then erode; Open = erode then dilate.
inline ValidityMask morphology(const ValidityMask& mask, const StructuringElement& se, MorphOp op) {
  if (se.width() > mask.width() || se.height() > mask.height()) {
    throw DimensionError("structuring element " + std::to_string(se.width()) + "x" +
                         std::to_string(se.height()) + " larger than mask");
  }
  switch (op) {
    case MorphOp::Erode:
      return detail::erode(mask, se);
    case MorphOp::Dilate:
      return detail::dilate(mask, se);
    case MorphOp::Close:
      return detail::erode(detail::dilate(mask, se), se);
    case MorphOp::Open:
      return detail::dilate(detail::erode(mask, se), se);
  }
  return mask;
}

}  // namespace longlens
