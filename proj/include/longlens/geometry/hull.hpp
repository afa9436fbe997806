#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace longlens {

template <typename T>
struct Point {
  T x{};
  T y{};
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

using Point2d = Point<double>;
using Point2i = Point<long long>;

template <typename T>
T cross(const Point<T>& o, const Point<T>& a, const Point<T>& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// repeating the first vertex; collinear points are dropped. Degenerate
/// inputs yield one vertex (all equal) or two (all collinear).
template <typename T>
std::vector<Point<T>> convex_hull(std::vector<Point<T>> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point<T>& a, const Point<T>& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point<T>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Shoelace area of a simple polygon (absolute value).
template <typename T>
double polygon_area(const std::vector<Point<T>>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    twice += static_cast<double>(a.x) * static_cast<double>(b.y) - static_cast<double>(b.x) * static_cast<double>(a.y);
  }
  return std::abs(twice) / 2.0;
}

}  // namespace longlens
